"""Command-line front end.

Subcommands: closed-form, shs, simulate, verify, extremum, conjecture, sweep.
All numeric output uses 12 significant digits and every CSV starts with
``# config:`` comment lines that are sufficient to replay the run, so a given
argv (plus seed) always reproduces identical bytes. Exit status: 0 on
success, 1 when a verified bound fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import analysis, builders, closed_form, shs
from .analysis import PropositionId, SimCheck
from .closed_form import ClosedFormId, RateParams
from .simulate import (
    ModelId,
    SimConfig,
    SimDiscipline,
    SimulationError,
    estimate_rows,
    simulate,
    write_estimates_csv,
)

MODEL_HELP = {
    "mm12-ps": "buffer-2 queue, drop-new when full, processor sharing",
    "mm12-fgfs": "buffer-2 queue, drop-new when full, oldest-first service",
    "mm12star-ps": "buffer-2 queue, arrival replaces newest when full, PS",
    "mm12star-fgfs": "buffer-2 queue, arrival replaces newest when full, FGFS",
    "mm12star2-ps": "buffer-2 queue, arrival replaces oldest when full, PS",
    "mm12star2-fgfs": "buffer-2 queue, arrival replaces oldest when full, FGFS",
    "mm11": "buffer-1 queue, arrival dropped while busy",
    "mm11star": "buffer-1 queue, arrival preempts the packet in service",
    "mm1-fgfs": "infinite queue, oldest-first service (requires rho < 1)",
    "mm1-ps-bound": "lower bound (mu-lambda)/(lambda*mu) on the infinite PS queue",
}

PROP_HELP = {
    "p2": "FGFS/PS ratio, buffer-2 drop-new: within [1, 1.2]",
    "p4": "FGFS/PS ratio, buffer-2 replace-newest: within [1, 4/3]",
    "p5": "drop-new/replace-newest PS ratio: within [1, 5/3]",
    "p8": "FGFS/PS ratio, buffer-2 replace-oldest: within [1, 1.0731], peak near rho=2.3943",
    "p9": "replace-newest/replace-oldest PS ratio: within [1, 3/2]",
    "cor1": "drop-new/replace-oldest PS ratio: within [1, 5/2]",
    "p10": "buffer-1 drop-new over replace-newest PS: within [1, 4/3]",
    "p11": "buffer-2 PS over buffer-1 drop-new: within [0.9641, 5/4], dip near rho=0.4697",
    "p12": "replace-oldest PS over preemptive buffer-1: within [1, 1.0788], peak near rho=2.3943",
    "lemma1": "truncated infinite-PS value stays above (mu-lambda)/(lambda*mu), rho < 1",
    "conj1": "excess term C(rho) of the infinite PS queue (use the conjecture subcommand)",
}

VERIFIABLE = ["p2", "p4", "p5", "p8", "p9", "cor1", "p10", "p11", "p12", "lemma1"]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_range(text: str) -> list[float]:
    """``start:stop:count`` (linear, inclusive), ``log:`` prefix for log spacing,
    or a single number."""
    spec = text
    logspace = False
    if spec.startswith("log:"):
        logspace = True
        spec = spec[4:]
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"range must be start:stop:count, got {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("range count must be >= 1")
    if count == 1:
        return [start]
    if logspace:
        if start <= 0 or stop <= 0:
            raise ValueError("log range endpoints must be > 0")
        return list(np.logspace(math.log10(start), math.log10(stop), count))
    return list(np.linspace(start, stop, count))


def _config_lines(args: argparse.Namespace, keys: Sequence[str]) -> list[str]:
    lines = [f"subcommand={args.command}"]
    for k in keys:
        lines.append(f"{k.replace('_', '-')}={getattr(args, k)}")
    return lines


def _open_out(args):
    if args.out and args.out != "-":
        return open(args.out, "w")
    return sys.stdout


def _default_seed() -> int:
    return int(os.environ.get("AOI_SEED", "0"))


def _sim_model(args) -> tuple[ModelId, tuple[float, ...]]:
    lams = (args.lam,) if args.lambda2 is None else (args.lam, args.lambda2)
    if args.model:
        mid = ModelId.from_closed_form(ClosedFormId.from_slug(args.model))
    else:
        if args.n is None:
            raise ValueError("give either --model or --discipline with --n")
        disc = SimDiscipline.PS if args.discipline == "ps" else SimDiscipline.FGFS
        mid = ModelId.truncated(disc, args.n)
    return mid, lams


def cmd_closed_form(args) -> int:
    p = RateParams(args.lam, args.mu)
    id = ClosedFormId.from_slug(args.model)
    if args.ratio_over:
        den = ClosedFormId.from_slug(args.ratio_over)
        if args.limit:
            value = closed_form.ratio_limit(id, den, args.limit)
        else:
            value = closed_form.ratio(id, den, p)
    else:
        value = closed_form.aaoi(id, p)
    print(_fmt(value))
    return 0


def cmd_shs(args) -> int:
    if args.model:
        id = ClosedFormId.from_slug(args.model)
        if args.lambda2 is not None:
            if id is not ClosedFormId.MM11S:
                raise ValueError(
                    "--lambda2 applies to mm11star or to truncated models "
                    "(--discipline/--n)")
            model = builders.build_two_source_preemptive(
                [args.lam, args.lambda2], args.mu,
                source_of_interest=args.soi - 1)
        else:
            model = builders.build_finite_model(id, RateParams(args.lam, args.mu))
    else:
        if args.n is None:
            raise ValueError("give either --model or --discipline with --n")
        disc = builders.Discipline.PS if args.discipline == "ps" else builders.Discipline.FGFS
        lams = [args.lam] if args.lambda2 is None else [args.lam, args.lambda2]
        model = builders.build_truncated_mm1(
            disc, lams, args.mu, builders.TruncationSpec(args.n),
            source_of_interest=args.soi - 1,
        )
    if args.dump:
        print(shs.dump_table(model), end="")
    sol = shs.solve_age_system(model)
    if args.show_v:
        for q, label in enumerate(model.labels):
            comps = " ".join(_fmt(x) for x in sol.v[q])
            print(f"v[{label}] = {comps}")
    print(_fmt(sol.aaoi))
    return 0


def cmd_simulate(args) -> int:
    mid, lams = _sim_model(args)
    config = SimConfig(
        model=mid, lams=lams, mu=args.mu, seed=args.seed,
        horizon_events=args.events, horizon_time=args.time,
        warmup=args.warmup, replications=args.reps,
    )
    est = simulate(config)
    rows = estimate_rows(config, est)
    keys = ["model", "discipline", "n", "lam", "lambda2", "mu", "events",
            "time", "warmup", "reps", "seed"]
    f = _open_out(args)
    try:
        write_estimates_csv(f, rows, _config_lines(args, keys))
    finally:
        if f is not sys.stdout:
            f.close()
    return 0


def cmd_verify(args) -> int:
    props = VERIFIABLE if args.prop == "all" else [args.prop]
    grid = parse_range(args.grid)
    lemma_grid = parse_range(args.lemma_grid)
    all_pass = True
    f = _open_out(args)
    try:
        for i, slug in enumerate(props):
            p = PropositionId.from_slug(slug)
            pts = lemma_grid if p is PropositionId.LEMMA1 else grid
            report = analysis.verify_bound(p, pts)
            all_pass &= report.passed
            upper = "inf" if math.isinf(report.stated_upper) else _fmt(report.stated_upper)
            print(
                f"{slug}: min {_fmt(report.observed_min)} at rho={_fmt(report.rho_at_min)}, "
                f"max {_fmt(report.observed_max)} at rho={_fmt(report.rho_at_max)}, "
                f"bounds [{_fmt(report.stated_lower)}, {upper}], "
                f"{'PASS' if report.passed else 'FAIL'}",
                file=sys.stderr if f is sys.stdout else sys.stdout,
            )
            config = _config_lines(args, ["prop", "grid", "lemma_grid"])
            analysis.write_bound_csv(f, report,
                                     config_lines=config if i == 0 else (),
                                     include_header=i == 0)
    finally:
        if f is not sys.stdout:
            f.close()
    return 0 if all_pass else 1


def cmd_extremum(args) -> int:
    res = analysis.find_ratio_extremum(PropositionId.from_slug(args.prop))
    print(
        f"{args.prop}: {res.kind} ratio {_fmt(res.ratio_at_star)} at "
        f"rho={_fmt(res.rho_star)} (stationarity-polynomial root "
        f"{_fmt(res.poly_root)}, gap {_fmt(res.agreement)})"
    )
    return 0


def cmd_conjecture(args) -> int:
    rhos = parse_range(args.rhos)
    sim_check = None
    if args.sim_events:
        sim_check = SimCheck(events=args.sim_events, replications=args.reps,
                             seed=args.seed)
    samples = analysis.conjecture_evidence(rhos, mu=args.mu, rel_tol=args.tol,
                                           sim=sim_check)
    keys = ["rhos", "mu", "tol", "sim_events", "reps", "seed"]
    f = _open_out(args)
    try:
        for line in _config_lines(args, keys):
            f.write(f"# config: {line}\n")
        f.write("rho,aaoi,n,converged,c,c_upper,within_general,"
                "eq13_applicable,eq13_lower,eq13_upper,within_eq13,"
                "lemma_lower,above_lemma,sim_mean,sim_ci,sim_consistent\n")
        def flag(x):
            return "" if x is None else str(x).lower()

        violations = []
        for s in samples:
            sim_mean = "" if s.sim_mean is None else _fmt(s.sim_mean)
            sim_ci = "" if s.sim_ci is None else _fmt(s.sim_ci)
            f.write(
                f"{_fmt(s.rho)},{_fmt(s.aaoi)},{s.n_used},{str(s.converged).lower()},"
                f"{_fmt(s.c_value)},{_fmt(s.general_upper)},{str(s.within_general).lower()},"
                f"{str(s.eq13_applicable).lower()},{_fmt(s.eq13_lower)},{_fmt(s.eq13_upper)},"
                f"{flag(s.within_eq13)},{_fmt(s.lemma_lower)},{str(s.above_lemma).lower()},"
                f"{sim_mean},{sim_ci},{flag(s.sim_consistent)}\n"
            )
            if not s.within_general or not s.above_lemma:
                violations.append(s.rho)
        if violations:
            print(
                "WARNING: conjectured bounds violated at rho = "
                + ", ".join(_fmt(r) for r in violations),
                file=sys.stderr,
            )
    finally:
        if f is not sys.stdout:
            f.close()
    return 0


def cmd_sweep(args) -> int:
    lam2_values = parse_range(args.lambda2)
    models = args.models.split(",")
    budget = SimCheck(events=args.events, replications=args.reps, seed=args.seed)
    method = "simulate" if args.method == "simulate" else "shs"
    rows = analysis.two_source_sweep(
        args.lambda1, lam2_values, args.mu, models=models,
        objective=args.objective, method=method, cap=args.n, budget=budget,
    )
    keys = ["lambda1", "lambda2", "mu", "models", "objective", "method", "n",
            "events", "reps", "seed"]
    f = _open_out(args)
    try:
        analysis.write_sweep_csv(f, rows, _config_lines(args, keys))
    finally:
        if f is not sys.stdout:
            f.close()
    return 0


def _add_rate_args(p, with_lambda2=True):
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="arrival rate of source 1")
    if with_lambda2:
        p.add_argument("--lambda2", type=float, default=None,
                       help="arrival rate of source 2 (two-source models)")
    p.add_argument("--mu", type=float, required=True, help="service rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoi",
        description="Average Age of Information of processor-sharing and "
                    "related status-update queues.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    model_list = "\n".join(f"  {k}: {v}" for k, v in MODEL_HELP.items())
    prop_list = "\n".join(f"  {k}: {v}" for k, v in PROP_HELP.items())

    p = sub.add_parser(
        "closed-form", help="evaluate an exact AAoI expression or a ratio",
        epilog="models:\n" + model_list,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--model", required=True, choices=sorted(MODEL_HELP))
    _add_rate_args(p, with_lambda2=False)
    p.add_argument("--ratio-over", choices=sorted(MODEL_HELP), default=None,
                   help="divide by this model's AAoI instead of printing the AAoI")
    p.add_argument("--limit", choices=["zero", "inf"], default=None,
                   help="with --ratio-over: exact limit of the ratio at the load extreme")
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser(
        "shs", help="solve the age linear system of a model",
        epilog="models:\n" + model_list,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--model", choices=sorted(set(MODEL_HELP) - {"mm1-fgfs", "mm1-ps-bound"}),
                   default=None)
    p.add_argument("--discipline", choices=["ps", "fgfs"], default="ps",
                   help="discipline of the truncated infinite-queue model")
    p.add_argument("--n", type=int, default=None, help="truncation buffer size")
    p.add_argument("--soi", type=int, choices=[1, 2], default=1,
                   help="source of interest for two-source models")
    _add_rate_args(p)
    p.add_argument("--dump", action="store_true", help="print the transition table")
    p.add_argument("--show-v", action="store_true",
                   help="print the per-state age-correlation vectors")
    p.set_defaults(func=cmd_shs)

    p = sub.add_parser(
        "simulate", help="Monte Carlo estimate of the time-average age",
        epilog="models:\n" + model_list,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--model", choices=sorted(set(MODEL_HELP) - {"mm1-fgfs", "mm1-ps-bound"}),
                   default=None)
    p.add_argument("--discipline", choices=["ps", "fgfs"], default="ps")
    p.add_argument("--n", type=int, default=None, help="buffer size for truncated models")
    _add_rate_args(p)
    p.add_argument("--events", type=int, default=None, help="horizon as an event count")
    p.add_argument("--time", type=float, default=None, help="horizon as simulated time")
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "verify", help="sweep a ratio bound over a load grid",
        epilog="propositions:\n" + prop_list,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--prop", choices=VERIFIABLE + ["all"], required=True)
    p.add_argument("--grid", default="log:1e-3:1e3:200",
                   help="load grid (start:stop:count, log: prefix for log spacing)")
    p.add_argument("--lemma-grid", default="0.1:0.9:9",
                   help="grid for the rho<1 lemma check")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "extremum", help="locate an interior extremum of a ratio",
        epilog="propositions:\n" + prop_list,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--prop", choices=["p8", "p11", "p12"], required=True)
    p.set_defaults(func=cmd_extremum)

    p = sub.add_parser(
        "conjecture",
        help="evidence table for the infinite-PS-queue excess term C(rho)",
    )
    p.add_argument("--rhos", default="0.1:0.9:9")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="relative truncation-convergence target")
    p.add_argument("--sim-events", type=int, default=None,
                   help="cross-check each point with a simulation of this many events")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_conjecture)

    p = sub.add_parser(
        "sweep", help="two-source AAoI comparison against the second source's rate",
    )
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--lambda2", required=True,
                   help="range of source-2 rates (start:stop:count, log: prefix)")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--models", default="ps,fgfs,mm11star",
                   help="comma-separated subset of ps,fgfs,mm11star")
    p.add_argument("--objective", choices=["source1", "sum"], default="source1")
    p.add_argument("--method", choices=["shs", "simulate"], default="shs")
    p.add_argument("--n", type=int, default=8, help="truncation cap for ps/fgfs")
    p.add_argument("--events", type=int, default=200000)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, closed_form.StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (shs.SolverError, shs.NonnegativityError, shs.StructureError,
            SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
