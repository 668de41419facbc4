"""Tour of the exact average-age expressions.

Every finite-buffer queue variant here has an AAoI that is a rational
function of the load rho = lambda/mu, scaled by 1/mu. This script prints the
values across a load sweep and the comparison ratios with their proven
envelopes.

Run:  python3 demos/closed_forms.py
"""

import numpy as np

from aoiq import ClosedFormId, RateParams, aaoi, ratio, ratio_limit

MU = 1.0
LOADS = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0]

FINITE = [
    ClosedFormId.MM12_PS, ClosedFormId.MM12_FGFS,
    ClosedFormId.MM12S_PS, ClosedFormId.MM12S_FGFS,
    ClosedFormId.MM12SS_PS, ClosedFormId.MM12SS_FGFS,
    ClosedFormId.MM11, ClosedFormId.MM11S,
]

print("AAoI at mu = 1 (rows: model, columns: rho)")
header = "model".ljust(16) + "".join(f"{r:>9}" for r in LOADS)
print(header)
print("-" * len(header))
for id in FINITE:
    row = [aaoi(id, RateParams(r * MU, MU)) for r in LOADS]
    print(id.value.ljust(16) + "".join(f"{v:9.4f}" for v in row))

print()
print("The infinite FGFS queue needs rho < 1 and blows up at both ends:")
for rho in (0.01, 0.1, 0.5, 0.9, 0.99):
    v = aaoi(ClosedFormId.MM1_FGFS, RateParams(rho, 1.0))
    print(f"  rho={rho:<5} aaoi={v:10.3f}")

print()
print("Comparison ratios (each provably sandwiched):")
pairs = [
    (ClosedFormId.MM12_FGFS, ClosedFormId.MM12_PS, "1 .. 1.2"),
    (ClosedFormId.MM12S_FGFS, ClosedFormId.MM12S_PS, "1 .. 4/3"),
    (ClosedFormId.MM12_PS, ClosedFormId.MM12S_PS, "1 .. 5/3"),
    (ClosedFormId.MM12SS_FGFS, ClosedFormId.MM12SS_PS, "1 .. 1.0731 (interior peak)"),
    (ClosedFormId.MM12_PS, ClosedFormId.MM11, "0.9641 .. 5/4 (interior dip)"),
]
for num, den, envelope in pairs:
    at_one = ratio(num, den, RateParams(1.0, 1.0))
    lim0 = ratio_limit(num, den, "zero")
    liminf = ratio_limit(num, den, "inf")
    print(f"  {num.value}/{den.value}: at rho=1 -> {at_one:.6f}, "
          f"limits ({lim0:.4g}, {liminf:.4g}), envelope {envelope}")

print()
print("Processor sharing always beats oldest-first service at equal buffers,")
print("and more aggressive replacement of stale packets always helps.")
