"""Two sources sharing one channel: who should get the queue?

A second source's traffic ages the first source's updates. This script
sweeps the second rate and compares three designs: processor sharing,
oldest-first service (both with a buffer of 8), and the tiny preemptive
single-buffer queue. The solver gives exact curves; the simulator puts
confidence intervals on the regime where everything is overloaded.

Run:  python3 demos/two_source_comparison.py
"""

import io
import warnings

from aoiq import SimCheck, two_source_sweep
from aoiq.analysis import write_sweep_csv

print("Source-1 age, lam1 = 0.1, second source creeping up (exact solves):")
rows = two_source_sweep(0.1, [0.001, 0.005, 0.01, 0.02, 0.05], 1.0, method="shs")
print("lam2      PS        FGFS      preemptive-1")
by_l2 = {}
for r in rows:
    by_l2.setdefault(r.lambda2, {})[r.model] = r.aaoi
for l2, t in by_l2.items():
    print(f"{l2:<8} {t['ps']:9.4f} {t['fgfs']:9.4f} {t['mm11star']:9.4f}")
print("Sharing stays ahead of oldest-first everywhere; the preemptive queue")
print("is unbeatable when the interferer is silent and collapses as it talks.")
print()

print("Summed ages of both sources, lam1 = 0.1 (exact solves):")
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # total load crosses 1 inside the sweep
    rows = two_source_sweep(0.1, [0.001, 0.1, 1.0], 1.0, objective="sum",
                            method="shs")
by_l2.clear()
for r in rows:
    by_l2.setdefault(r.lambda2, {})[r.model] = r.aaoi
for l2, t in by_l2.items():
    print(f"lam2={l2:<6} PS={t['ps']:9.3f} FGFS={t['fgfs']:9.3f} "
          f"preemptive={t['mm11star']:9.3f}")
print()

print("Both rates large (lam1=5, lam2=1000): exact solves, then simulation")
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    exact_rows = two_source_sweep(5.0, [1000.0], 1.0, objective="sum",
                                  method="shs")
    rows = two_source_sweep(5.0, [1000.0], 1.0, objective="sum",
                            method="simulate",
                            budget=SimCheck(events=10**6, replications=20, seed=3))
exact = {r.model: r.aaoi for r in exact_rows}
for r in rows:
    print(f"  {r.model:<9} exact sum = {exact[r.model]:8.1f}   "
          f"simulated = {r.aaoi:8.1f} +- {r.ci95:.1f}")
print("With everyone overloaded the preemptive queue wins the sum: holding")
print("old work is pointless when fresh updates arrive every instant. At")
print("these rates a source-1 update lands only every ~200 time units, so")
print("the simulation intervals are wide; the exact column settles the order.")
print()

buf = io.StringIO()
write_sweep_csv(buf, rows, ["demo=two_source_comparison"])
print("CSV rows are one function call away, for plotting elsewhere:")
print(buf.getvalue())
