"""Closed-form AAoI values, ratios, limits, and their invariants."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoiq.closed_form import (
    ClosedFormId,
    RateParams,
    StabilityError,
    aaoi,
    conjecture_bounds,
    horner,
    rational_form,
    ratio,
    ratio_limit,
)

ALL_IDS = list(ClosedFormId)
FINITE = [i for i in ALL_IDS if i not in (ClosedFormId.MM1_FGFS,
                                          ClosedFormId.MM1_PS_LOWER_BOUND)]


def exact_aaoi(id: ClosedFormId, lam, mu) -> Fraction:
    """Rational-arithmetic evaluation, the cross-check for the float path."""
    num, den = rational_form(id)
    rho = Fraction(lam) / Fraction(mu)
    return horner(num, rho) / (Fraction(mu) * horner(den, rho))


# Values computable by hand from the coefficient tables.
SPOT_VALUES = [
    (ClosedFormId.MM12_PS, 1, 1, Fraction(5, 2)),
    (ClosedFormId.MM12_FGFS, 1, 1, Fraction(8, 3)),
    (ClosedFormId.MM12S_PS, 1, 1, Fraction(53, 24)),
    (ClosedFormId.MM12S_FGFS, 1, 1, Fraction(29, 12)),
    (ClosedFormId.MM12SS_PS, 1, 1, Fraction(101, 48)),
    (ClosedFormId.MM12SS_FGFS, 1, 1, Fraction(53, 24)),
    (ClosedFormId.MM11, 1, 1, Fraction(5, 2)),
    (ClosedFormId.MM11S, 1, 1, Fraction(2)),
    (ClosedFormId.MM1_FGFS, Fraction(1, 2), 1, Fraction(7, 2)),
    (ClosedFormId.MM1_PS_LOWER_BOUND, Fraction(1, 2), 1, Fraction(1)),
]


@pytest.mark.parametrize("id,lam,mu,expected", SPOT_VALUES)
def test_spot_values(id, lam, mu, expected):
    assert exact_aaoi(id, lam, mu) == expected
    got = aaoi(id, RateParams(float(lam), float(mu)))
    assert got == pytest.approx(float(expected), rel=1e-14)


@pytest.mark.parametrize("id", ALL_IDS)
def test_float_matches_rational(id):
    rng = np.random.default_rng(7)
    for _ in range(6):
        lam = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
        mu = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
        if id in (ClosedFormId.MM1_FGFS, ClosedFormId.MM1_PS_LOWER_BOUND):
            mu = mu + lam  # force rho < 1
        exact = exact_aaoi(id, lam, mu)
        got = aaoi(id, RateParams(float(lam), float(mu)))
        assert got == pytest.approx(float(exact), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    id=st.sampled_from(ALL_IDS),
    lam=st.floats(0.01, 50.0),
    mu=st.floats(0.01, 50.0),
    c=st.floats(0.001, 1000.0),
)
def test_scale_covariance(id, lam, mu, c):
    if id in (ClosedFormId.MM1_FGFS, ClosedFormId.MM1_PS_LOWER_BOUND):
        mu = mu + lam
    base = aaoi(id, RateParams(lam, mu))
    scaled = aaoi(id, RateParams(c * lam, c * mu))
    assert scaled * c == pytest.approx(base, rel=1e-12)


def test_ratio_spot_value():
    got = ratio(ClosedFormId.MM12_FGFS, ClosedFormId.MM12_PS, RateParams(1, 1))
    assert got == pytest.approx(16 / 15, rel=1e-14)


def test_ratio_limits_exact():
    assert ratio_limit(ClosedFormId.MM12_FGFS, ClosedFormId.MM12_PS, "inf") == 1.2
    assert ratio_limit(ClosedFormId.MM12S_FGFS, ClosedFormId.MM12S_PS, "zero") == 1.0
    assert ratio_limit(ClosedFormId.MM12S_PS, ClosedFormId.MM12SS_PS, "inf") == 1.5
    assert ratio_limit(ClosedFormId.MM12_PS, ClosedFormId.MM12SS_PS, "inf") == 2.5
    assert ratio_limit(ClosedFormId.MM12_PS, ClosedFormId.MM11, "inf") == 1.25
    # every variant scales like 1/lambda at vanishing load, so this tends to 1
    assert ratio_limit(ClosedFormId.MM1_FGFS, ClosedFormId.MM11S, "zero") == 1.0
    # degree mismatch gives a divergent (or vanishing) formal limit
    assert ratio_limit(ClosedFormId.MM1_FGFS, ClosedFormId.MM11S, "inf") == math.inf
    assert ratio_limit(ClosedFormId.MM11S, ClosedFormId.MM1_FGFS, "inf") == 0.0


GRID = np.logspace(-3, 3, 200)

RATIO_GE_ONE = [
    (ClosedFormId.MM12_FGFS, ClosedFormId.MM12_PS),
    (ClosedFormId.MM12S_FGFS, ClosedFormId.MM12S_PS),
    (ClosedFormId.MM12_PS, ClosedFormId.MM12S_PS),
    (ClosedFormId.MM12SS_FGFS, ClosedFormId.MM12SS_PS),
    (ClosedFormId.MM12S_PS, ClosedFormId.MM12SS_PS),
    (ClosedFormId.MM12_PS, ClosedFormId.MM12SS_PS),
    (ClosedFormId.MM11, ClosedFormId.MM12S_PS),
    (ClosedFormId.MM12SS_PS, ClosedFormId.MM11S),
]


@pytest.mark.parametrize("num,den", RATIO_GE_ONE)
def test_ratios_at_least_one_on_grid(num, den):
    values = [ratio(num, den, RateParams(r, 1.0)) for r in GRID]
    assert min(values) >= 1.0 - 1e-12


def test_mm12ps_over_mm11_can_dip_below_one():
    values = [ratio(ClosedFormId.MM12_PS, ClosedFormId.MM11, RateParams(r, 1.0))
              for r in GRID]
    assert min(values) < 1.0
    assert min(values) >= 0.9641 - 5e-5  # printed four-decimal floor


def test_preemption_helps_pointwise():
    for r in GRID:
        p = RateParams(r, 1.0)
        assert aaoi(ClosedFormId.MM12S_PS, p) <= aaoi(ClosedFormId.MM12_PS, p) + 1e-14
        assert aaoi(ClosedFormId.MM12SS_PS, p) <= aaoi(ClosedFormId.MM12S_PS, p) + 1e-14
        assert aaoi(ClosedFormId.MM11S, p) <= aaoi(ClosedFormId.MM12SS_PS, p) + 1e-14


def test_mm1_fgfs_diverges_at_both_ends():
    mid = aaoi(ClosedFormId.MM1_FGFS, RateParams(0.5, 1.0))
    low = aaoi(ClosedFormId.MM1_FGFS, RateParams(1e-4, 1.0))
    high = aaoi(ClosedFormId.MM1_FGFS, RateParams(1 - 1e-4, 1.0))
    assert low >= 100 * mid
    assert high >= 100 * mid


def test_stability_guard():
    for id in (ClosedFormId.MM1_FGFS, ClosedFormId.MM1_PS_LOWER_BOUND):
        with pytest.raises(StabilityError):
            aaoi(id, RateParams(1.0, 1.0))
        with pytest.raises(StabilityError):
            aaoi(id, RateParams(1.0 - 1e-13, 1.0))
        aaoi(id, RateParams(0.999, 1.0))  # admissible


@pytest.mark.parametrize("lam,mu", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0),
                                    (math.inf, 1.0), (math.nan, 1.0)])
def test_bad_rates_rejected(lam, mu):
    with pytest.raises(ValueError):
        RateParams(lam, mu)


def test_conjecture_bounds_values():
    b = conjecture_bounds(0.5)
    assert b.lower == 0.0
    assert b.upper == pytest.approx(0.5, rel=1e-14)
    assert b.large_rho_lower == 0.0
    b9 = conjecture_bounds(0.9)
    assert b9.upper == pytest.approx(8.1, rel=1e-12)
    assert b9.large_rho_upper == pytest.approx(0.675 / math.sqrt(0.1), rel=1e-12)
    assert b9.large_rho_lower == pytest.approx(0.4 ** 3 / 0.1, rel=1e-12)
    assert b9.large_rho_applicable


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.5, 1.5])
def test_conjecture_bounds_domain(rho):
    with pytest.raises(ValueError):
        conjecture_bounds(rho)


def test_unknown_slug_lists_valid_set():
    with pytest.raises(ValueError, match="mm12-ps"):
        ClosedFormId.from_slug("nope")
