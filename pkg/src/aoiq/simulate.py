"""Discrete-event Monte Carlo estimation of time-average age.

The event loop is an exponential race: arrivals occur at the summed source
rates, a departure at rate mu while the system is nonempty. Under processor
sharing the departing packet is uniform over the queue (each of n packets
departs at rate mu/n); under FGFS the oldest departs. Memorylessness of the
exponential service makes this race exact, so the simulator mirrors the
Markov models transition for transition; it would be wrong for general
service-time distributions.

A delivery only resets a source's age when the delivered packet was generated
after the last delivered packet of that source; stale deliveries leave the
age ramp untouched. That is the sample-path equivalent of the fake-update
bookkeeping used by the linear age solver, without materializing fake packets.

Age areas are accumulated with exact trapezoids between events. Replications
use streams derived from (seed, replication index), so any replication can be
reproduced on its own and results are bit-identical for identical configs.

The hot loop is compiled with numba; one source and two sources, all buffer
policies, and the optional sawtooth recording share a single kernel so that
a processor-sharing run and an FGFS run with the same seed see the same
arrival process and the same event times (only the choice of departing packet
differs), which makes paired comparisons sharp.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np
from numba import njit
from scipy import stats

from .closed_form import ClosedFormId


class SimulationError(RuntimeError):
    """Raised when a run cannot produce a meaningful estimate."""


class FullPolicy(Enum):
    """What an arrival does when it finds the buffer full."""

    DROP_NEW = 0
    REPLACE_NEWEST = 1
    REPLACE_OLDEST = 2
    PREEMPT = 3  # buffer-1 idiom: same mechanics as REPLACE_OLDEST


class SimDiscipline(Enum):
    PS = 0
    FGFS = 1


@dataclass(frozen=True)
class ModelId:
    """Queue variant: service discipline x buffer size x full-buffer policy."""

    discipline: SimDiscipline
    capacity: int
    full_policy: FullPolicy

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    @classmethod
    def from_closed_form(cls, id: ClosedFormId) -> "ModelId":
        table = {
            ClosedFormId.MM12_PS: (SimDiscipline.PS, 2, FullPolicy.DROP_NEW),
            ClosedFormId.MM12_FGFS: (SimDiscipline.FGFS, 2, FullPolicy.DROP_NEW),
            ClosedFormId.MM12S_PS: (SimDiscipline.PS, 2, FullPolicy.REPLACE_NEWEST),
            ClosedFormId.MM12S_FGFS: (SimDiscipline.FGFS, 2, FullPolicy.REPLACE_NEWEST),
            ClosedFormId.MM12SS_PS: (SimDiscipline.PS, 2, FullPolicy.REPLACE_OLDEST),
            ClosedFormId.MM12SS_FGFS: (SimDiscipline.FGFS, 2, FullPolicy.REPLACE_OLDEST),
            ClosedFormId.MM11: (SimDiscipline.FGFS, 1, FullPolicy.DROP_NEW),
            ClosedFormId.MM11S: (SimDiscipline.FGFS, 1, FullPolicy.PREEMPT),
        }
        if id not in table:
            raise ValueError(f"{id.value} is not a finite model; give an explicit ModelId")
        return cls(*table[id])

    @classmethod
    def truncated(cls, discipline: SimDiscipline, capacity: int) -> "ModelId":
        return cls(discipline, capacity, FullPolicy.DROP_NEW)

    @property
    def slug(self) -> str:
        for cf in ClosedFormId:
            try:
                if ModelId.from_closed_form(cf) == self:
                    return cf.value
            except ValueError:
                continue
        return f"mm1-{'ps' if self.discipline is SimDiscipline.PS else 'fgfs'}-n{self.capacity}"


@dataclass(frozen=True)
class SimConfig:
    """One simulation request; exactly one of the two horizons must be set."""

    model: ModelId
    lams: tuple[float, ...]
    mu: float
    seed: int
    horizon_events: int | None = None
    horizon_time: float | None = None
    warmup: float = 0.1
    replications: int = 1

    def __post_init__(self):
        if not self.lams or any(not x > 0 for x in self.lams):
            raise ValueError(f"arrival rates must be positive, got {self.lams}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if (self.horizon_events is None) == (self.horizon_time is None):
            raise ValueError("set exactly one of horizon_events / horizon_time")
        if self.horizon_events is not None and self.horizon_events <= 0:
            raise ValueError("horizon_events must be > 0")
        if self.horizon_time is not None and self.horizon_time <= 0:
            raise ValueError("horizon_time must be > 0")
        if not 0.0 <= self.warmup < 1.0:
            raise ValueError("warmup fraction must lie in [0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class SimEstimate:
    """Per-source time-average age with a 95% confidence half-width.

    ``deliveries`` counts every departure inside the measured window;
    ``informative`` only those that actually reset a source's age. Identical
    (config, seed) pairs produce bit-identical estimates.
    """

    mean_age: tuple[float, ...]
    ci95: tuple[float, ...]
    events: int
    deliveries: tuple[int, ...]
    informative: tuple[int, ...]
    seed: int
    replications: int
    duration: float  # total measured time, summed over replications


@dataclass(frozen=True)
class AgeTrace:
    """Piecewise-linear age path of one source: slope 1 between breakpoints."""

    times: np.ndarray
    ages: np.ndarray
    source: int
    truncated: bool
    duration: float
    mean_age: float


@njit(cache=True)
def _run(lams, mu, cap, disc, policy, n_events, t_end, warmup, seed,
         q_src, q_gen, area, glast, deliv, useful,
         rec_source, rec_t, rec_a):  # pragma: no cover - compiled
    np.random.seed(seed)
    S = lams.shape[0]
    lam_total = 0.0
    for i in range(S):
        lam_total += lams[i]
        glast[i] = 0.0
        area[i] = 0.0
        deliv[i] = 0
        useful[i] = 0

    by_events = n_events > 0
    warm_ev = np.int64(warmup * n_events) if by_events else np.int64(0)
    t_w = 0.0 if by_events else warmup * t_end

    t = 0.0
    n = 0
    ev = np.int64(0)
    t0 = 0.0
    t1 = 0.0
    measuring = by_events and warm_ev == 0
    npts = 0
    truncated = False
    recording = rec_source >= 0 and rec_t.shape[0] >= 2
    if measuring and recording:
        rec_t[npts] = 0.0
        rec_a[npts] = -glast[rec_source]
        npts += 1

    while True:
        if by_events and ev >= n_events:
            t1 = t
            break
        ev += 1
        total = lam_total + (mu if n > 0 else 0.0)
        dt = np.random.exponential(1.0 / total)
        tn = t + dt

        if by_events:
            if measuring:
                for s in range(S):
                    a0 = t - glast[s]
                    area[s] += dt * (a0 + 0.5 * dt)
        else:
            # clip the segment [t, tn] to the measurement window [t_w, t_end]
            lo = t if t > t_w else t_w
            hi = tn if tn < t_end else t_end
            if hi > lo:
                for s in range(S):
                    g = glast[s]
                    area[s] += ((hi - g) ** 2 - (lo - g) ** 2) * 0.5
            if not measuring and tn >= t_w:
                measuring = True
                t0 = t_w
                if recording:
                    rec_t[npts] = t_w
                    rec_a[npts] = t_w - glast[rec_source]
                    npts += 1
            if tn >= t_end:
                t1 = t_end
                break
        t = tn

        u = np.random.random() * total
        if u < lam_total:
            src = 0
            acc = lams[0]
            while u >= acc:
                src += 1
                acc += lams[src]
            if n < cap:
                q_src[n] = src
                q_gen[n] = t
                n += 1
            elif policy == 1:  # replace newest
                q_src[n - 1] = src
                q_gen[n - 1] = t
            elif policy >= 2:  # replace oldest / preempt
                for j in range(n - 1):
                    q_src[j] = q_src[j + 1]
                    q_gen[j] = q_gen[j + 1]
                q_src[n - 1] = src
                q_gen[n - 1] = t
            # policy 0 drops the incoming packet
        else:
            if n > 1:
                u2 = np.random.random()  # drawn under FGFS too: keeps streams aligned
                k = int(u2 * n) if disc == 0 else 0
                if k >= n:
                    k = n - 1
            else:
                k = 0
            src = q_src[k]
            gen = q_gen[k]
            for j in range(k, n - 1):
                q_src[j] = q_src[j + 1]
                q_gen[j] = q_gen[j + 1]
            n -= 1
            if measuring:
                deliv[src] += 1
            if gen > glast[src]:
                if measuring:
                    useful[src] += 1
                    if recording and src == rec_source:
                        if npts + 3 > rec_t.shape[0]:
                            truncated = True
                            t1 = t
                            break
                        rec_t[npts] = t
                        rec_a[npts] = t - glast[src]
                        rec_t[npts + 1] = t
                        rec_a[npts + 1] = t - gen
                        npts += 2
                glast[src] = gen

        if by_events and ev == warm_ev:
            measuring = True
            t0 = t
            for s in range(S):
                area[s] = 0.0
            if recording:
                rec_t[npts] = t
                rec_a[npts] = t - glast[rec_source]
                npts += 1

    if recording and npts > 0 and not truncated:
        rec_t[npts] = t1
        rec_a[npts] = t1 - glast[rec_source]
        npts += 1
    if truncated:
        # areas already cover exactly [t0, t1]; close the trace at t1
        rec_t[npts] = t1
        rec_a[npts] = t1 - glast[rec_source]
        npts += 1
    return t0, t1, ev, npts, truncated


def _replication_seeds(seed: int, replications: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(replications)


def _run_one(config: SimConfig, rep_seed: int, rec_source: int = -1,
             max_points: int = 0):
    lams = np.asarray(config.lams, dtype=np.float64)
    S = lams.shape[0]
    cap = config.model.capacity
    q_src = np.zeros(cap, dtype=np.int64)
    q_gen = np.zeros(cap, dtype=np.float64)
    area = np.zeros(S)
    glast = np.zeros(S)
    deliv = np.zeros(S, dtype=np.int64)
    useful = np.zeros(S, dtype=np.int64)
    rec_t = np.zeros(max(max_points, 0), dtype=np.float64)
    rec_a = np.zeros(max(max_points, 0), dtype=np.float64)
    t0, t1, ev, npts, truncated = _run(
        lams, config.mu, cap,
        config.model.discipline.value, config.model.full_policy.value,
        np.int64(config.horizon_events or 0),
        float(config.horizon_time or 0.0),
        config.warmup, np.uint32(rep_seed),
        q_src, q_gen, area, glast, deliv, useful,
        rec_source, rec_t, rec_a,
    )
    return t0, t1, ev, area, deliv, useful, rec_t[:npts], rec_a[:npts], truncated


def simulate(config: SimConfig) -> SimEstimate:
    """Run all replications and aggregate means with a 95% confidence interval.

    Raises
    ------
    SimulationError
        If any replication records no delivery inside its measurement window
        (the horizon is too small, or the warmup swallows it).
    """
    seeds = _replication_seeds(config.seed, config.replications)
    S = len(config.lams)
    means = np.zeros((config.replications, S))
    events = 0
    total_duration = 0.0
    deliveries = np.zeros(S, dtype=np.int64)
    informative = np.zeros(S, dtype=np.int64)
    for r in range(config.replications):
        t0, t1, ev, area, deliv, useful, _, _, _ = _run_one(config, seeds[r])
        duration = t1 - t0
        if duration <= 0 or deliv.sum() == 0:
            raise SimulationError(
                f"replication {r}: no delivery inside the measured window "
                f"(duration {duration:.3g}); increase the horizon or lower warmup"
            )
        means[r] = area / duration
        events += int(ev)
        total_duration += duration
        deliveries += deliv
        informative += useful
    mean = means.mean(axis=0)
    if config.replications > 1:
        half = stats.t.ppf(0.975, config.replications - 1) * means.std(
            axis=0, ddof=1
        ) / np.sqrt(config.replications)
    else:
        half = np.zeros(S)
    return SimEstimate(
        mean_age=tuple(float(x) for x in mean),
        ci95=tuple(float(x) for x in half),
        events=events,
        deliveries=tuple(int(x) for x in deliveries),
        informative=tuple(int(x) for x in informative),
        seed=config.seed,
        replications=config.replications,
        duration=total_duration,
    )


def sawtooth_trace(config: SimConfig, max_points: int, source: int = 0) -> AgeTrace:
    """Breakpoints of one source's age path, from replication stream 0.

    The path has slope exactly 1 between breakpoints and jumps down only at
    informative deliveries. If the run would produce more than ``max_points``
    breakpoints the trace stops early (``truncated=True``) and covers only the
    window it recorded; ``mean_age`` is always the exact time average over the
    covered window, so integrating the breakpoints reproduces it.
    """
    if max_points < 2:
        raise ValueError("max_points must be >= 2")
    if not 0 <= source < len(config.lams):
        raise ValueError(f"source {source} out of range")
    seeds = _replication_seeds(config.seed, config.replications)
    t0, t1, ev, area, deliv, useful, rec_t, rec_a, truncated = _run_one(
        config, seeds[0], rec_source=source, max_points=max_points + 1
    )
    duration = t1 - t0
    if duration <= 0:
        raise SimulationError("measured window is empty; increase the horizon")
    return AgeTrace(
        times=rec_t,
        ages=rec_a,
        source=source,
        truncated=truncated,
        duration=duration,
        mean_age=float(area[source] / duration),
    )


TRACE_CSV_HEADER = "time,age,source"
ESTIMATES_CSV_HEADER = "model,lambda1,lambda2,mu,source,mean_age,ci95,seed,events"


def write_trace_csv(f: IO[str], traces: Iterable[AgeTrace],
                    config_lines: Sequence[str] = ()) -> None:
    for line in config_lines:
        f.write(f"# config: {line}\n")
    f.write(TRACE_CSV_HEADER + "\n")
    for trace in traces:
        for t, a in zip(trace.times, trace.ages):
            f.write(f"{t:.12g},{a:.12g},{trace.source + 1}\n")


def write_estimates_csv(f: IO[str], rows: Iterable[tuple],
                        config_lines: Sequence[str] = ()) -> None:
    """Rows are (model_slug, lam1, lam2_or_None, mu, source, mean, ci, seed, events)."""
    for line in config_lines:
        f.write(f"# config: {line}\n")
    f.write(ESTIMATES_CSV_HEADER + "\n")
    for slug, lam1, lam2, mu, source, mean, ci, seed, events in rows:
        lam2_txt = f"{lam2:.12g}" if lam2 is not None else "0"
        f.write(
            f"{slug},{lam1:.12g},{lam2_txt},{mu:.12g},{source},"
            f"{mean:.12g},{ci:.12g},{seed},{events}\n"
        )


def estimate_rows(config: SimConfig, est: SimEstimate) -> list[tuple]:
    """Flatten an estimate into CSV rows, one per source."""
    lam1 = config.lams[0]
    lam2 = config.lams[1] if len(config.lams) > 1 else None
    return [
        (config.model.slug, lam1, lam2, config.mu, s + 1,
         est.mean_age[s], est.ci95[s], est.seed, est.events)
        for s in range(len(config.lams))
    ]
