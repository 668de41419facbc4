"""Exact average Age of Information (AAoI) of single-server status-update queues.

Every supported queue variant has an AAoI that is a rational function of the
load ``rho = lambda/mu``, scaled by ``1/mu``:

    aaoi(lam, mu) = N(rho) / (mu * D(rho))

with integer-coefficient polynomials N and D. Evaluating in ``rho`` makes the
scale covariance ``aaoi(c*lam, c*mu) = aaoi(lam, mu) / c`` exact, and ratios of
two AAoI expressions become pure functions of ``rho`` whose limits at
``rho -> 0`` and ``rho -> inf`` follow from the trailing/leading coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class StabilityError(ValueError):
    """Raised when a queue that requires rho < 1 is evaluated at rho >= 1."""


# Strict stability guard for the infinite-buffer forms.
STABILITY_MARGIN = 1e-12


@dataclass(frozen=True)
class RateParams:
    """Arrival rate ``lam`` and service rate ``mu``, both per unit time."""

    lam: float
    mu: float

    def __post_init__(self):
        for name, value in (("lam", self.lam), ("mu", self.mu)):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value}")

    @property
    def rho(self) -> float:
        """Load lambda/mu, always derived, never stored."""
        return self.lam / self.mu


class ClosedFormId(Enum):
    """Queue variants with a known exact AAoI expression.

    Buffer-2 variants differ in what happens when a packet arrives while two
    packets are present: plain M/M/1/2 drops the new packet, the single-star
    variant replaces the newest waiting packet, the double-star variant
    replaces the oldest. M/M/1/1 drops arrivals while busy; M/M/1/1* preempts
    the packet in service. The two M/M/1 entries require rho < 1.
    """

    MM12_PS = "mm12-ps"
    MM12_FGFS = "mm12-fgfs"
    MM12S_PS = "mm12star-ps"
    MM12S_FGFS = "mm12star-fgfs"
    MM12SS_PS = "mm12star2-ps"
    MM12SS_FGFS = "mm12star2-fgfs"
    MM11 = "mm11"
    MM11S = "mm11star"
    MM1_FGFS = "mm1-fgfs"
    MM1_PS_LOWER_BOUND = "mm1-ps-bound"

    @classmethod
    def from_slug(cls, slug: str) -> "ClosedFormId":
        for member in cls:
            if member.value == slug:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown model {slug!r}; valid models: {valid}")


# AAoI = N(rho) / (mu * D(rho)); coefficients highest power first.
# The infinite-buffer entries are only valid for rho < 1.
_FORMS: dict[ClosedFormId, tuple[tuple[int, ...], tuple[int, ...], bool]] = {
    ClosedFormId.MM12_PS: ((5, 9, 8, 6, 2), (2, 4, 4, 2, 0), False),
    ClosedFormId.MM12_FGFS: ((3, 5, 4, 3, 1), (1, 2, 2, 1, 0), False),
    ClosedFormId.MM12S_PS: ((3, 11, 15, 14, 8, 2), (2, 6, 8, 6, 2, 0), False),
    ClosedFormId.MM12S_FGFS: ((2, 7, 8, 7, 4, 1), (1, 3, 4, 3, 1, 0), False),
    ClosedFormId.MM12SS_PS: ((2, 11, 25, 29, 22, 10, 2), (2, 8, 14, 14, 8, 2, 0), False),
    ClosedFormId.MM12SS_FGFS: ((1, 6, 14, 15, 11, 5, 1), (1, 4, 7, 7, 4, 1, 0), False),
    ClosedFormId.MM11: ((2, 2, 1), (1, 1, 0), False),
    ClosedFormId.MM11S: ((1, 1), (1, 0), False),
    ClosedFormId.MM1_FGFS: ((1, -1, 0, 1), (-1, 1, 0), True),
    ClosedFormId.MM1_PS_LOWER_BOUND: ((-1, 1), (1, 0), True),
}

FINITE_IDS: tuple[ClosedFormId, ...] = tuple(
    i for i, (_, _, stable) in _FORMS.items() if not stable
)


def rational_form(id: ClosedFormId) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Integer coefficient tuples (numerator, denominator) in rho, highest first.

    Exposed so that callers can re-evaluate an expression in exact arithmetic
    (e.g. with ``fractions.Fraction``) independently of the float path.
    """
    num, den, _ = _FORMS[id]
    return num, den


def horner(coeffs, x):
    """Evaluate a polynomial given highest-first coefficients.

    Works for floats and exact number types alike (the accumulator adopts the
    type of ``x``).
    """
    acc = x * 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def requires_stability(id: ClosedFormId) -> bool:
    return _FORMS[id][2]


def _check_admissible(id: ClosedFormId, p: RateParams) -> None:
    if _FORMS[id][2] and not p.rho < 1.0 - STABILITY_MARGIN:
        raise StabilityError(
            f"{id.value} requires rho < 1 (strictly, rho < 1 - 1e-12); got rho = {p.rho}"
        )


def aaoi(id: ClosedFormId, p: RateParams) -> float:
    """Exact AAoI of the given queue variant at rates ``p``, in time units.

    Raises
    ------
    StabilityError
        For the infinite-buffer variants when rho >= 1 - 1e-12.
    """
    _check_admissible(id, p)
    num, den, _ = _FORMS[id]
    rho = p.rho
    return horner(num, rho) / (p.mu * horner(den, rho))


def ratio(num: ClosedFormId, den: ClosedFormId, p: RateParams) -> float:
    """AAoI ratio aaoi(num)/aaoi(den); dimensionless, a function of rho only."""
    return aaoi(num, p) / aaoi(den, p)


def _valuation(coeffs) -> tuple[int, int]:
    """(degree, index of trailing nonzero) of a highest-first coefficient tuple."""
    deg = len(coeffs) - 1
    for k in range(deg, -1, -1):
        if coeffs[k] != 0:
            return deg, k
    raise ValueError("zero polynomial")


def ratio_limit(num: ClosedFormId, den: ClosedFormId, at: str) -> float:
    """Limit of ``ratio(num, den)`` as rho -> 0 (``at='zero'``) or rho -> inf.

    Computed exactly from the leading (or trailing) integer coefficients of
    the combined rational function, not by floating-point extrapolation.
    Returns ``math.inf`` when the limit diverges.
    """
    n1, d1, _ = _FORMS[num]
    n2, d2, _ = _FORMS[den]
    # ratio = (n1 * d2) / (d1 * n2) as polynomials in rho
    if at == "inf":
        top_deg = _valuation(n1)[0] + _valuation(d2)[0]
        bot_deg = _valuation(d1)[0] + _valuation(n2)[0]
        if top_deg > bot_deg:
            return math.inf
        if top_deg < bot_deg:
            return 0.0
        val = Fraction(n1[0] * d2[0], d1[0] * n2[0])
    elif at == "zero":
        # trailing behaviour: rho^(len-1-k) valuation per factor
        def tail(coeffs):
            deg, k = _valuation(coeffs)
            return deg - k, coeffs[k]  # (order of the zero at rho=0, coefficient)

        o1, c1 = tail(n1)
        o2, c2 = tail(d2)
        o3, c3 = tail(d1)
        o4, c4 = tail(n2)
        top, bot = o1 + o2, o3 + o4
        if top > bot:
            return 0.0
        if top < bot:
            return math.inf
        val = Fraction(c1 * c2, c3 * c4)
    else:
        raise ValueError(f"at must be 'zero' or 'inf', got {at!r}")
    return float(val)


@dataclass(frozen=True)
class ConjectureBounds:
    """Bounds on the load-dependent excess term C(rho) of the M/M/1-PS AAoI.

    The AAoI is written as (1/mu) * (1/rho + 1 + C(rho)). The general bounds
    0 <= C <= rho^2/(1-rho) are asserted on all of (0, 1); the sharper pair
    (rho-0.5)^3/(1-rho) <= C <= 0.75*rho/sqrt(1-rho) only where it is
    self-consistent (lower <= upper), which is how "rho large enough" is
    decided here.
    """

    lower: float
    upper: float
    large_rho_lower: float
    large_rho_upper: float
    large_rho_applicable: bool


def conjecture_bounds(rho: float) -> ConjectureBounds:
    """Bound values for C(rho); rho must lie strictly inside (0, 1)."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must be in (0, 1), got {rho}")
    upper = rho * rho / (1.0 - rho)
    lo_big = (rho - 0.5) ** 3 / (1.0 - rho)
    up_big = 0.75 * rho / math.sqrt(1.0 - rho)
    return ConjectureBounds(
        lower=0.0,
        upper=upper,
        large_rho_lower=lo_big,
        large_rho_upper=up_big,
        large_rho_applicable=lo_big <= up_big,
    )
