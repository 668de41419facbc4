"""Simulator behaviour: determinism, exactness of the age accounting,
agreement with the exact expressions, and the trace export."""

import io

import numpy as np
import pytest

from aoiq.builders import Discipline, TruncationSpec, build_truncated_mm1
from aoiq.closed_form import ClosedFormId, RateParams, aaoi
from aoiq.shs import solve_age_system, stationary_distribution
from aoiq.builders import build_finite_model
from aoiq.simulate import (
    ESTIMATES_CSV_HEADER,
    FullPolicy,
    ModelId,
    SimConfig,
    SimDiscipline,
    SimulationError,
    TRACE_CSV_HEADER,
    estimate_rows,
    sawtooth_trace,
    simulate,
    write_estimates_csv,
    write_trace_csv,
)


def config(model, lams=(1.0,), mu=1.0, events=100_000, reps=3, seed=11, **kw):
    return SimConfig(model=model, lams=lams, mu=mu, seed=seed,
                     horizon_events=events, replications=reps, **kw)


MM12_PS = ModelId.from_closed_form(ClosedFormId.MM12_PS)


def test_bit_identical_replay():
    a = simulate(config(MM12_PS))
    b = simulate(config(MM12_PS))
    assert a == b  # dataclass equality over float tuples: identical bits


def test_seed_changes_estimate():
    a = simulate(config(MM12_PS, seed=11))
    b = simulate(config(MM12_PS, seed=12))
    assert a.mean_age != b.mean_age


def test_ps_fgfs_identical_at_buffer_one():
    ps = ModelId(SimDiscipline.PS, 1, FullPolicy.DROP_NEW)
    fg = ModelId(SimDiscipline.FGFS, 1, FullPolicy.DROP_NEW)
    ta = sawtooth_trace(config(ps, reps=1, events=20_000), max_points=100_000)
    tb = sawtooth_trace(config(fg, reps=1, events=20_000), max_points=100_000)
    assert np.array_equal(ta.times, tb.times)
    assert np.array_equal(ta.ages, tb.ages)
    assert simulate(config(ps)) == simulate(config(fg))


def trace_integral(trace):
    t, a = trace.times, trace.ages
    return float(np.sum(0.5 * (a[1:] + a[:-1]) * (t[1:] - t[:-1])))


def test_trace_integral_matches_mean():
    c = config(MM12_PS, reps=1, events=50_000)
    trace = sawtooth_trace(c, max_points=200_000)
    assert not trace.truncated
    est = simulate(c.__class__(**{**c.__dict__, "replications": 1}))
    mean_from_trace = trace_integral(trace) / trace.duration
    assert mean_from_trace == pytest.approx(trace.mean_age, rel=1e-9)
    assert mean_from_trace == pytest.approx(est.mean_age[0], rel=1e-9)


def test_trace_piecewise_slope_one_and_downward_jumps():
    trace = sawtooth_trace(config(MM12_PS, reps=1, events=5_000), max_points=50_000)
    t, a = trace.times, trace.ages
    for i in range(1, len(t)):
        dt = t[i] - t[i - 1]
        if dt > 0:
            assert a[i] - a[i - 1] == pytest.approx(dt, rel=1e-9, abs=1e-12)
        else:
            assert a[i] <= a[i - 1] + 1e-12  # deliveries never raise the age


def test_trace_without_deliveries_is_single_ramp():
    # service is starved out of the race: the few events are all arrivals
    mid = ModelId(SimDiscipline.PS, 4, FullPolicy.DROP_NEW)
    c = SimConfig(model=mid, lams=(1.0,), mu=1e-12, seed=5,
                  horizon_events=3, warmup=0.0, replications=1)
    trace = sawtooth_trace(c, max_points=10)
    assert len(trace.times) == 2
    assert trace.ages[1] - trace.ages[0] == pytest.approx(
        trace.times[1] - trace.times[0], rel=1e-12)


def test_trace_truncation_keeps_window_consistent():
    c = config(MM12_PS, reps=1, events=50_000)
    trace = sawtooth_trace(c, max_points=50)
    assert trace.truncated
    assert len(trace.times) <= 51
    assert trace_integral(trace) / trace.duration == pytest.approx(
        trace.mean_age, rel=1e-9)


def test_time_horizon_mode():
    mid = ModelId(SimDiscipline.PS, 4, FullPolicy.DROP_NEW)
    c = SimConfig(model=mid, lams=(1.0,), mu=1.0, seed=3,
                  horizon_time=5000.0, warmup=0.1, replications=1)
    trace = sawtooth_trace(c, max_points=500_000)
    est = simulate(c)
    assert trace_integral(trace) / trace.duration == pytest.approx(
        est.mean_age[0], rel=1e-9)
    assert trace.duration == pytest.approx(4500.0, rel=1e-12)


@pytest.mark.parametrize("id,expected", [
    (ClosedFormId.MM12_PS, 2.5),
    (ClosedFormId.MM12SS_FGFS, 53 / 24),
    (ClosedFormId.MM11S, 2.0),
])
def test_agreement_with_exact_values(id, expected):
    est = simulate(config(ModelId.from_closed_form(id),
                          events=200_000, reps=10, seed=21))
    assert abs(est.mean_age[0] - expected) <= max(est.ci95[0] * 1.5, 0.01 * expected)


def test_statistical_agreement_across_grid():
    # each finite model, a spread of rates, small budget: within 3 standard
    # errors at 95% of the points
    rng = np.random.default_rng(17)
    points = [(0.3, 1.0), (1.0, 1.0), (3.0, 1.0), (1.0, 0.4)]
    checks = []
    for id in (ClosedFormId.MM12_PS, ClosedFormId.MM12_FGFS,
               ClosedFormId.MM12S_PS, ClosedFormId.MM12S_FGFS,
               ClosedFormId.MM12SS_PS, ClosedFormId.MM12SS_FGFS,
               ClosedFormId.MM11, ClosedFormId.MM11S):
        for lam, mu in points:
            exact = aaoi(id, RateParams(lam, mu))
            est = simulate(config(ModelId.from_closed_form(id), lams=(lam,),
                                  mu=mu, events=120_000, reps=8,
                                  seed=int(rng.integers(1, 2**31))))
            se = est.ci95[0] / 1.96 if est.ci95[0] > 0 else 1e-9
            checks.append(abs(est.mean_age[0] - exact) <= 3 * se)
    assert np.mean(checks) >= 0.95


def test_little_law_throughput():
    # delivered rate equals lam * (1 - blocking probability) for drop-new
    lam, mu = 1.0, 1.0
    model = build_finite_model(ClosedFormId.MM12_PS, RateParams(lam, mu))
    p_block = stationary_distribution(model)[-1]
    c = config(MM12_PS, lams=(lam,), mu=mu, events=400_000, reps=4, seed=9)
    est = simulate(c)
    rate = est.deliveries[0] / est.duration
    assert rate == pytest.approx(lam * (1 - p_block), rel=0.01)


def test_preemptive_delivery_rate_saturates_at_mu():
    mid = ModelId(SimDiscipline.FGFS, 1, FullPolicy.PREEMPT)
    c = SimConfig(model=mid, lams=(50.0,), mu=1.0, seed=2,
                  horizon_time=20_000.0, replications=1)
    est = simulate(c)
    # informative deliveries per unit time approach mu as the server saturates
    rate = est.informative[0] / est.duration
    assert rate == pytest.approx(50.0 / 51.0, rel=0.05)


def test_common_random_numbers_ordering():
    # paired comparison with one seed: sharing beats oldest-first for source 1
    ps = simulate(SimConfig(model=ModelId.truncated(SimDiscipline.PS, 8),
                            lams=(0.1, 0.02), mu=1.0, seed=77,
                            horizon_events=300_000, replications=5))
    fg = simulate(SimConfig(model=ModelId.truncated(SimDiscipline.FGFS, 8),
                            lams=(0.1, 0.02), mu=1.0, seed=77,
                            horizon_events=300_000, replications=5))
    assert ps.mean_age[0] < fg.mean_age[0]


def test_two_source_simulation_matches_solver():
    lams, mu, cap = (0.3, 0.4), 1.0, 5
    est = simulate(SimConfig(model=ModelId.truncated(SimDiscipline.PS, cap),
                             lams=lams, mu=mu, seed=31,
                             horizon_events=300_000, replications=10))
    for soi in (0, 1):
        m = build_truncated_mm1(Discipline.PS, list(lams), mu,
                                TruncationSpec(cap), source_of_interest=soi)
        exact = solve_age_system(m).aaoi
        assert abs(est.mean_age[soi] - exact) <= 2 * est.ci95[soi]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(model=MM12_PS, lams=(), mu=1.0, seed=1, horizon_events=10)
    with pytest.raises(ValueError):
        SimConfig(model=MM12_PS, lams=(1.0,), mu=0.0, seed=1, horizon_events=10)
    with pytest.raises(ValueError):
        SimConfig(model=MM12_PS, lams=(1.0,), mu=1.0, seed=1)
    with pytest.raises(ValueError):
        SimConfig(model=MM12_PS, lams=(1.0,), mu=1.0, seed=1,
                  horizon_events=10, horizon_time=5.0)
    with pytest.raises(ValueError):
        SimConfig(model=MM12_PS, lams=(1.0,), mu=1.0, seed=1,
                  horizon_events=10, warmup=1.0)
    with pytest.raises(ValueError):
        ModelId(SimDiscipline.PS, 0, FullPolicy.DROP_NEW)


def test_no_delivery_horizon_raises():
    # arrivals swamp the race and the warmup eats most of the short horizon
    with pytest.raises(SimulationError):
        simulate(config(MM12_PS, lams=(1e6,), mu=1.0, events=3, reps=1,
                        warmup=0.5))


def test_model_slugs():
    assert MM12_PS.slug == "mm12-ps"
    assert ModelId.truncated(SimDiscipline.FGFS, 17).slug == "mm1-fgfs-n17"
    with pytest.raises(ValueError):
        ModelId.from_closed_form(ClosedFormId.MM1_FGFS)


def test_csv_writers():
    c = SimConfig(model=ModelId.truncated(SimDiscipline.PS, 4),
                  lams=(0.5, 0.25), mu=1.0, seed=4,
                  horizon_events=20_000, replications=2)
    est = simulate(c)
    buf = io.StringIO()
    write_estimates_csv(buf, estimate_rows(c, est), ["seed=4"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# config: seed=4"
    assert lines[1] == ESTIMATES_CSV_HEADER
    assert len(lines) == 4  # one row per source
    assert lines[2].startswith("mm1-ps-n4,0.5,0.25,1,1,")

    trace = sawtooth_trace(c, max_points=10_000)
    buf = io.StringIO()
    write_trace_csv(buf, [trace])
    lines = buf.getvalue().splitlines()
    assert lines[0] == TRACE_CSV_HEADER
    assert lines[1].split(",")[2] == "1"
