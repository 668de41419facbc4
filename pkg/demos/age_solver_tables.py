"""Inside the age solver: transition tables and the solved vectors.

Each queue model is a small Markov chain plus reset maps that say how the
age coordinates move at every transition. Solving two linear systems (the
stationary distribution, then the age-correlation vectors) gives the AAoI as
the sum of the monitor components.

Run:  python3 demos/age_solver_tables.py
"""

from aoiq import (
    ClosedFormId,
    RateParams,
    aaoi,
    build_finite_model,
    dump_table,
    solve_age_system,
    stationary_distribution,
)

p = RateParams(1.0, 1.0)

for id in (ClosedFormId.MM12_PS, ClosedFormId.MM12SS_FGFS, ClosedFormId.MM11S):
    model = build_finite_model(id, p)
    print(f"=== {id.value} at lambda = mu = 1 ===")
    print(dump_table(model), end="")
    pi = stationary_distribution(model)
    sol = solve_age_system(model)
    print("pi =", ", ".join(f"{x:.6f}" for x in pi))
    for q, label in enumerate(model.labels):
        print(f"v[{label}] =", ", ".join(f"{x:.6f}" for x in sol.v[q]))
    print(f"aaoi = sum of monitor components = {sol.aaoi:.12g}")
    print(f"closed form                      = {aaoi(id, p):.12g}")
    print()

print("Reading the drop-new PS table: the two rate-mu/2 rows are the two")
print("equally likely departures; when the newer packet leaves first, the")
print("older one is overwritten with a placeholder at the same age, so its")
print("own later delivery can never drag the monitor age backwards.")
