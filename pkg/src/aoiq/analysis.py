"""Verification of the AAoI comparison claims over load sweeps.

Each claim is either a two-sided bound on a ratio of closed-form AAoI
expressions, a strict lower bound on the (numerically solved) infinite PS
queue, or the conjectured sandwich for the M/M/1-PS excess term. Ratios are
functions of the load alone, so sweeps run over a load grid with mu = 1.

Bound constants that are printed as rounded decimals (1.0731, 0.9641, 1.0788)
are checked with a half-ulp-of-print allowance: the exact extremum of the
0.9641 claim is 0.96409826... and of the 1.0788 claim 1.07882775..., so an
exact-arithmetic comparison against the printed four-decimal constants would
be meaningless. Exact rational bounds (1.2, 4/3, 3/2, 5/4, 5/2, 5/3, 1) are
enforced to 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import optimize

from . import closed_form as cf
from .builders import (
    Discipline,
    TruncationSpec,
    build_truncated_mm1,
    build_two_source_preemptive,
    mm1_ps_truncated_aaoi,
)
from .closed_form import ClosedFormId, RateParams
from .shs import solve_age_system
from .simulate import FullPolicy, ModelId, SimConfig, SimDiscipline, simulate

EXACT_TOL = 1e-9
PRINTED_DECIMAL_TOL = 5e-5  # half an ulp of a 4-decimal printed constant


class PropositionId(Enum):
    """Verifiable claims, keyed the way the toolkit's reports name them."""

    P2 = "p2"
    P4 = "p4"
    P5 = "p5"
    P8 = "p8"
    P9_STAR = "p9"
    COR1 = "cor1"
    P10_MM11_VS_STAR = "p10"
    P11_MM11_VS_MM12PS = "p11"
    P12_MM11STAR = "p12"
    LEMMA1 = "lemma1"
    CONJ1 = "conj1"

    @classmethod
    def from_slug(cls, slug: str) -> "PropositionId":
        for member in cls:
            if member.value == slug:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown proposition {slug!r}; valid: {valid}")


@dataclass(frozen=True)
class _RatioSpec:
    num: ClosedFormId
    den: ClosedFormId
    lower: float
    upper: float
    lower_tol: float
    upper_tol: float
    extremum: str | None = None        # 'max' or 'min' for interior extrema
    stated_rho_star: float | None = None
    stated_ratio_star: float | None = None
    description: str = ""


# Stationarity polynomials of the two ratios with interior extrema
# (numerator of d(ratio)/d(rho); coefficients highest power first).
# The drop-oldest FGFS/PS ratio and the drop-oldest-PS over preemptive-
# buffer-1 ratio share one polynomial; its positive root locates both peaks.
EXTREMUM_POLY = {
    "p8": (-2, -12, -14, 36, 128, 172, 122, 44, 6, 0, 0),
    "p12": (-2, -12, -14, 36, 128, 172, 122, 44, 6, 0, 0),
    "p11": (4, 36, 44, 20, -6, -8, 0),
}

_SPECS: dict[PropositionId, _RatioSpec] = {
    PropositionId.P2: _RatioSpec(
        ClosedFormId.MM12_FGFS, ClosedFormId.MM12_PS, 1.0, 1.2, EXACT_TOL, EXACT_TOL,
        description="FGFS over PS, buffer 2, drop-new",
    ),
    PropositionId.P4: _RatioSpec(
        ClosedFormId.MM12S_FGFS, ClosedFormId.MM12S_PS, 1.0, 4 / 3, EXACT_TOL, EXACT_TOL,
        description="FGFS over PS, buffer 2, replace-newest",
    ),
    PropositionId.P5: _RatioSpec(
        ClosedFormId.MM12_PS, ClosedFormId.MM12S_PS, 1.0, 5 / 3, EXACT_TOL, EXACT_TOL,
        description="drop-new over replace-newest, PS",
    ),
    PropositionId.P8: _RatioSpec(
        ClosedFormId.MM12SS_FGFS, ClosedFormId.MM12SS_PS, 1.0, 1.0731,
        EXACT_TOL, PRINTED_DECIMAL_TOL,
        extremum="max", stated_rho_star=2.3943, stated_ratio_star=1.0731,
        description="FGFS over PS, buffer 2, replace-oldest",
    ),
    PropositionId.P9_STAR: _RatioSpec(
        ClosedFormId.MM12S_PS, ClosedFormId.MM12SS_PS, 1.0, 1.5, EXACT_TOL, EXACT_TOL,
        description="replace-newest over replace-oldest, PS",
    ),
    PropositionId.COR1: _RatioSpec(
        ClosedFormId.MM12_PS, ClosedFormId.MM12SS_PS, 1.0, 2.5, EXACT_TOL, EXACT_TOL,
        description="drop-new over replace-oldest, PS",
    ),
    PropositionId.P10_MM11_VS_STAR: _RatioSpec(
        ClosedFormId.MM11, ClosedFormId.MM12S_PS, 1.0, 4 / 3, EXACT_TOL, EXACT_TOL,
        description="buffer-1 drop-new over replace-newest PS",
    ),
    PropositionId.P11_MM11_VS_MM12PS: _RatioSpec(
        ClosedFormId.MM12_PS, ClosedFormId.MM11, 0.9641, 1.25,
        PRINTED_DECIMAL_TOL, EXACT_TOL,
        extremum="min", stated_rho_star=0.4697, stated_ratio_star=0.9641,
        description="buffer-2 PS over buffer-1 drop-new",
    ),
    PropositionId.P12_MM11STAR: _RatioSpec(
        ClosedFormId.MM12SS_PS, ClosedFormId.MM11S, 1.0, 1.0788,
        EXACT_TOL, PRINTED_DECIMAL_TOL,
        extremum="max", stated_rho_star=2.3943, stated_ratio_star=1.0788,
        description="replace-oldest PS over preemptive buffer 1",
    ),
}


def ratio_spec(p: PropositionId) -> _RatioSpec:
    if p not in _SPECS:
        raise ValueError(f"{p.value} is not a closed-form ratio bound")
    return _SPECS[p]


def ratio_value(p: PropositionId, rho: float, trunc_tol: float = 1e-6) -> float:
    """The claim's ratio at load rho (mu = 1; every ratio is load-only)."""
    if p is PropositionId.LEMMA1:
        if not 0 < rho < 1:
            raise ValueError(f"lemma grid requires 0 < rho < 1, got {rho}")
        value, _, converged = mm1_ps_truncated_aaoi(rho, 1.0, rel_tol=trunc_tol)
        if not converged:
            raise RuntimeError(f"truncation did not converge at rho={rho}")
        bound = cf.aaoi(ClosedFormId.MM1_PS_LOWER_BOUND, RateParams(rho, 1.0))
        return value / bound
    spec = ratio_spec(p)
    return cf.ratio(spec.num, spec.den, RateParams(rho, 1.0))


def ratio_limits(p: PropositionId) -> tuple[float, float]:
    """Exact limits of the claim's ratio at rho -> 0 and rho -> inf."""
    spec = ratio_spec(p)
    return (
        cf.ratio_limit(spec.num, spec.den, "zero"),
        cf.ratio_limit(spec.num, spec.den, "inf"),
    )


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one bound sweep over a load grid."""

    proposition: PropositionId
    grid_desc: str
    rhos: tuple[float, ...]
    ratios: tuple[float, ...]
    observed_min: float
    observed_max: float
    rho_at_min: float
    rho_at_max: float
    stated_lower: float
    stated_upper: float
    rho_star: float
    passed: bool


def default_log_grid(n: int = 200, lo: float = 1e-3, hi: float = 1e3) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def verify_bound(
    p: PropositionId,
    grid: Sequence[float],
    trunc_tol: float = 1e-6,
) -> BoundReport:
    """Evaluate the claim's ratio on the grid and compare extrema to its bounds.

    For the lemma about the infinite PS queue the "ratio" is the converged
    truncated value over the closed-form lower bound, and the grid must stay
    inside (0, 1).
    """
    if p is PropositionId.CONJ1:
        raise ValueError("use conjecture_evidence for the conjecture")
    grid = [float(r) for r in grid]
    if not grid:
        raise ValueError("grid must be non-empty")
    if p is PropositionId.LEMMA1:
        lower, upper = 1.0, math.inf
        lo_tol, up_tol = EXACT_TOL, 0.0
        rs = None
    else:
        rs = ratio_spec(p)
        lower, upper = rs.lower, rs.upper
        lo_tol, up_tol = rs.lower_tol, rs.upper_tol
    values = [ratio_value(p, r, trunc_tol) for r in grid]
    arr = np.asarray(values)
    i_min, i_max = int(arr.argmin()), int(arr.argmax())
    passed = bool(
        arr[i_min] >= lower - lo_tol
        and (math.isinf(upper) or arr[i_max] <= upper + up_tol)
    )
    binding_min = rs is not None and rs.extremum == "min"
    return BoundReport(
        proposition=p,
        grid_desc=f"{len(grid)} loads in [{min(grid):.6g}, {max(grid):.6g}]",
        rhos=tuple(grid),
        ratios=tuple(float(x) for x in values),
        observed_min=float(arr[i_min]),
        observed_max=float(arr[i_max]),
        rho_at_min=grid[i_min],
        rho_at_max=grid[i_max],
        stated_lower=lower,
        stated_upper=upper,
        rho_star=grid[i_min] if binding_min else grid[i_max],
        passed=passed,
    )


@dataclass(frozen=True)
class ExtremumResult:
    proposition: PropositionId
    rho_star: float
    ratio_at_star: float
    kind: str                 # 'max' or 'min'
    poly_root: float          # positive root of the stationarity polynomial
    agreement: float          # |rho_star - poly_root|


def find_ratio_extremum(p: PropositionId) -> ExtremumResult:
    """Locate the interior extremum of a ratio with a non-monotone profile.

    The optimum comes from bracketing plus golden-section refinement on the
    ratio itself; it is cross-checked against the sign change of the
    stationarity polynomial, an independent route to the same point.
    """
    spec = ratio_spec(p)
    if spec.extremum is None:
        raise ValueError(f"{p.value} has no interior extremum in (1e-4, 1e4)")
    sign = -1.0 if spec.extremum == "max" else 1.0

    def f(rho: float) -> float:
        return sign * cf.ratio(spec.num, spec.den, RateParams(rho, 1.0))

    scan = np.logspace(-4, 4, 500)
    fs = np.array([f(r) for r in scan])
    i = int(fs.argmin())
    if i == 0 or i == len(scan) - 1:
        raise RuntimeError(f"no interior extremum found for {p.value}")
    res = optimize.minimize_scalar(
        f, bracket=(scan[i - 1], scan[i], scan[i + 1]), method="golden",
        options={"xtol": 1e-9},
    )
    rho_star = float(res.x)

    poly = EXTREMUM_POLY[p.value]
    root = optimize.brentq(lambda r: cf.horner(poly, r), 0.05, 50.0, xtol=1e-12)
    return ExtremumResult(
        proposition=p,
        rho_star=rho_star,
        ratio_at_star=float(sign * res.fun),
        kind=spec.extremum,
        poly_root=float(root),
        agreement=abs(rho_star - root),
    )


@dataclass(frozen=True)
class SimCheck:
    """Budget for the optional simulation cross-check of solver output."""

    events: int = 200_000
    replications: int = 10
    seed: int = 20240901


@dataclass(frozen=True)
class ConjectureSample:
    """Evidence about the M/M/1-PS excess term C(rho) at one load."""

    rho: float
    aaoi: float
    n_used: int
    converged: bool
    c_value: float
    general_upper: float
    within_general: bool
    eq13_applicable: bool
    eq13_lower: float
    eq13_upper: float
    within_eq13: bool | None
    lemma_lower: float
    above_lemma: bool
    sim_mean: float | None = None
    sim_ci: float | None = None
    sim_consistent: bool | None = None


def conjecture_evidence(
    rhos: Sequence[float],
    mu: float = 1.0,
    rel_tol: float = 1e-6,
    sim: SimCheck | None = None,
) -> list[ConjectureSample]:
    """Compute C(rho) = mu*aaoi - 1/rho - 1 from converged truncated solves.

    Each sample carries its own convergence flag; non-converged points are
    reported as such, never silently mixed in. When a simulation budget is
    given, the same truncated system is simulated and the solver value must
    fall inside the simulation confidence interval.
    """
    out = []
    for rho in rhos:
        if not 0 < rho < 1:
            raise ValueError(f"conjecture loads must be in (0, 1), got {rho}")
        value, n_used, converged = mm1_ps_truncated_aaoi(rho, mu, rel_tol=rel_tol)
        c_value = mu * value - 1.0 / rho - 1.0
        bounds = cf.conjecture_bounds(rho)
        lemma_lower = cf.aaoi(
            ClosedFormId.MM1_PS_LOWER_BOUND, RateParams(rho * mu, mu)
        )
        within_eq13 = None
        if bounds.large_rho_applicable:
            within_eq13 = bool(
                bounds.large_rho_lower <= c_value <= bounds.large_rho_upper
            )
        sim_mean = sim_ci = sim_consistent = None
        if sim is not None:
            est = simulate(SimConfig(
                model=ModelId.truncated(SimDiscipline.PS, n_used),
                lams=(rho * mu,), mu=mu, seed=sim.seed,
                horizon_events=sim.events, replications=sim.replications,
            ))
            sim_mean, sim_ci = est.mean_age[0], est.ci95[0]
            sim_consistent = bool(abs(value - sim_mean) <= sim_ci)
        out.append(ConjectureSample(
            rho=float(rho),
            aaoi=value,
            n_used=n_used,
            converged=converged,
            c_value=c_value,
            general_upper=bounds.upper,
            within_general=bool(-1e-12 <= c_value <= bounds.upper),
            eq13_applicable=bounds.large_rho_applicable,
            eq13_lower=bounds.large_rho_lower,
            eq13_upper=bounds.large_rho_upper,
            within_eq13=within_eq13,
            lemma_lower=lemma_lower,
            above_lemma=bool(value > lemma_lower),
            sim_mean=sim_mean,
            sim_ci=sim_ci,
            sim_consistent=sim_consistent,
        ))
    return out


SWEEP_MODELS = ("ps", "fgfs", "mm11star")


@dataclass(frozen=True)
class SweepRow:
    lambda2: float
    model: str
    objective: str
    aaoi: float
    method: str
    ci95: float


def _sweep_point_shs(model: str, lams, mu, cap) -> tuple[float, float]:
    """(aaoi of source 1, aaoi of source 2) by solving the age system."""
    values = []
    for soi in (0, 1):
        if model == "mm11star":
            m = build_two_source_preemptive(lams, mu, source_of_interest=soi)
        else:
            m = build_truncated_mm1(
                Discipline.PS if model == "ps" else Discipline.FGFS,
                lams, mu, TruncationSpec(cap), source_of_interest=soi,
            )
        values.append(solve_age_system(m).aaoi)
    return values[0], values[1]


def _sweep_point_sim(model: str, lams, mu, cap, budget: SimCheck):
    if model == "mm11star":
        mid = ModelId(SimDiscipline.FGFS, 1, FullPolicy.PREEMPT)
    else:
        mid = ModelId.truncated(
            SimDiscipline.PS if model == "ps" else SimDiscipline.FGFS, cap
        )
    est = simulate(SimConfig(
        model=mid, lams=tuple(lams), mu=mu, seed=budget.seed,
        horizon_events=budget.events, replications=budget.replications,
    ))
    return est.mean_age, est.ci95


def two_source_sweep(
    lam1: float,
    lam2_values: Sequence[float],
    mu: float,
    models: Sequence[str] = SWEEP_MODELS,
    objective: str = "source1",
    method: str = "shs",
    cap: int = 8,
    budget: SimCheck | None = None,
) -> list[SweepRow]:
    """AAoI of each model as the second source's rate sweeps over a range.

    ``objective`` selects the monitored quantity: source 1's AAoI or the sum
    over both sources. ``method`` is either the truncated age solver ("shs")
    or the simulator ("simulate"); rows carry a confidence half-width only
    for the latter.
    """
    if objective not in ("source1", "sum"):
        raise ValueError("objective must be 'source1' or 'sum'")
    if method not in ("shs", "simulate"):
        raise ValueError("method must be 'shs' or 'simulate'")
    unknown = set(models) - set(SWEEP_MODELS)
    if unknown:
        raise ValueError(f"unknown models {sorted(unknown)}; valid: {SWEEP_MODELS}")
    if method == "simulate" and budget is None:
        budget = SimCheck()

    rows = []
    for lam2 in lam2_values:
        if not lam2 > 0:
            raise ValueError(f"lambda2 values must be > 0, got {lam2}")
        lams = (lam1, float(lam2))
        for model in models:
            if method == "shs":
                d1, d2 = _sweep_point_shs(model, lams, mu, cap)
                value = d1 if objective == "source1" else d1 + d2
                ci = 0.0
            else:
                means, cis = _sweep_point_sim(model, lams, mu, cap, budget)
                if objective == "source1":
                    value, ci = means[0], cis[0]
                else:
                    value, ci = means[0] + means[1], cis[0] + cis[1]
            rows.append(SweepRow(
                lambda2=float(lam2), model=model, objective=objective,
                aaoi=float(value), method=method, ci95=float(ci),
            ))
    return rows


BOUND_CSV_HEADER = "prop,rho,ratio,lower,upper,pass"
SWEEP_CSV_HEADER = "lambda2,model,objective,aaoi,method,ci95"


def write_bound_csv(f: IO[str], report: BoundReport,
                    config_lines: Sequence[str] = (),
                    include_header: bool = True) -> None:
    for line in config_lines:
        f.write(f"# config: {line}\n")
    if include_header:
        f.write(BOUND_CSV_HEADER + "\n")
    if report.proposition is PropositionId.LEMMA1:
        lo_tol, up_tol = EXACT_TOL, 0.0
    else:
        rs = ratio_spec(report.proposition)
        lo_tol, up_tol = rs.lower_tol, rs.upper_tol
    upper_txt = "inf" if math.isinf(report.stated_upper) else f"{report.stated_upper:.12g}"
    for rho, ratio in zip(report.rhos, report.ratios):
        ok = ratio >= report.stated_lower - lo_tol and (
            math.isinf(report.stated_upper) or ratio <= report.stated_upper + up_tol
        )
        f.write(
            f"{report.proposition.value},{rho:.12g},{ratio:.12g},"
            f"{report.stated_lower:.12g},{upper_txt},{str(ok).lower()}\n"
        )


def write_sweep_csv(f: IO[str], rows: Iterable[SweepRow],
                    config_lines: Sequence[str] = ()) -> None:
    for line in config_lines:
        f.write(f"# config: {line}\n")
    f.write(SWEEP_CSV_HEADER + "\n")
    for r in rows:
        f.write(
            f"{r.lambda2:.12g},{r.model},{r.objective},{r.aaoi:.12g},"
            f"{r.method},{r.ci95:.12g}\n"
        )
