"""Constructors for every queue model the age solver understands.

The eight finite-buffer models are written out transition by transition; the
truncated M/M/1 builders generate the same structure for any buffer size N
(arrivals beyond N are blocked) and for one or two sources.

Conventions shared by all builders:

* packet coordinates are kept oldest-first: coordinate 1 is the oldest packet
  in the system, the newest sits at coordinate n;
* when the k-th oldest packet is delivered, coordinate 0 takes its age, every
  packet older than it turns into a placeholder ("fake update") carrying the
  same age so a later delivery of it cannot move the monitor age, and fresher
  packets shift down one slot;
* under processor sharing each of the n packets departs at rate mu/n; under
  FGFS only the oldest departs, at rate mu.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .closed_form import ClosedFormId, RateParams
from .shs import ResetMap, ShsModel, Transition, solve_age_system

# Guards against accidentally huge linear systems: total unknowns
# (states x coordinates), and the exponential two-source state space.
MAX_UNKNOWNS = 500_000
MAX_TWO_SOURCE_N = 10


class Discipline(Enum):
    PS = "ps"
    FGFS = "fgfs"


@dataclass(frozen=True)
class TruncationSpec:
    """Buffer size for approximating the infinite M/M/1 queue.

    Arrivals that find ``max_packets`` packets in the system are blocked
    (dropped); the model's age dimension is ``max_packets + 1``.
    """

    max_packets: int
    admission: str = "block"

    def __post_init__(self):
        if self.max_packets < 1:
            raise ValueError("max_packets must be >= 1")
        if self.admission != "block":
            raise ValueError(f"unsupported admission policy {self.admission!r}")


def _r(*source: int) -> ResetMap:
    return ResetMap(source)


def build_finite_model(id: ClosedFormId, p: RateParams) -> ShsModel:
    """Transition table of a finite-buffer variant at rates ``p``.

    The buffer-2 models have three states (0, 1, 2 packets) and age dimension
    3; the buffer-1 models have two states and dimension 2. The infinite
    M/M/1 entries are rejected here; use :func:`build_truncated_mm1`.
    """
    lam, mu = p.lam, p.mu

    if id in (ClosedFormId.MM1_FGFS, ClosedFormId.MM1_PS_LOWER_BOUND):
        raise ValueError(f"{id.value} has no finite table; use build_truncated_mm1")

    if id in (ClosedFormId.MM11, ClosedFormId.MM11S):
        # Two states: empty, one packet in service.
        b = [(1, 0), (1, 1)]
        trans = [
            Transition(lam, 0, 1, _r(0, -1)),   # arrival to empty queue
            Transition(mu, 1, 0, _r(1, -1)),    # delivery
        ]
        if id is ClosedFormId.MM11:
            # arrival while busy is discarded
            trans.append(Transition(lam, 1, 1, _r(0, 1)))
        else:
            # arrival while busy preempts the packet in service
            trans.append(Transition(lam, 1, 1, _r(0, -1)))
        return ShsModel(labels=["0", "1"], b=np.array(b), transitions=trans)

    # Buffer-2 family: states 0, 1, 2 packets; coordinates (monitor, older, newer).
    b = [(1, 0, 0), (1, 1, 0), (1, 1, 1)]
    trans = [
        Transition(lam, 0, 1, _r(0, -1, -1)),        # l=0 arrival to empty
        Transition(mu, 1, 0, _r(1, -1, -1)),         # l=1 delivery of the only packet
        Transition(lam, 1, 2, _r(0, 1, -1)),         # l=2 arrival to half-full queue
    ]
    if id in (ClosedFormId.MM12_PS, ClosedFormId.MM12S_PS, ClosedFormId.MM12SS_PS):
        trans.append(Transition(mu / 2, 2, 1, _r(1, 2, -1)))  # l=3 older departs
        trans.append(Transition(mu / 2, 2, 1, _r(2, 2, -1)))  # l=4 newer departs
    else:
        trans.append(Transition(mu, 2, 1, _r(1, 2, -1)))      # l=3 oldest departs
    # Full-queue arrival: what happens to the two stored packets.
    full = {
        ClosedFormId.MM12_PS: _r(0, 1, 2),       # new packet discarded
        ClosedFormId.MM12_FGFS: _r(0, 1, 2),
        ClosedFormId.MM12S_PS: _r(0, 1, -1),     # newest replaced
        ClosedFormId.MM12S_FGFS: _r(0, 1, -1),
        ClosedFormId.MM12SS_PS: _r(0, 2, -1),    # oldest replaced
        ClosedFormId.MM12SS_FGFS: _r(0, 2, -1),
    }[id]
    trans.append(Transition(lam, 2, 2, full))
    return ShsModel(labels=["0", "1", "2"], b=np.array(b), transitions=trans)


def _departure_reset(D: int, n: int, k: int, refresh_monitor: bool,
                     refresh_older: Sequence[bool] | None = None) -> ResetMap:
    """Reset for the departure of the k-th oldest of n packets (1-based).

    ``refresh_monitor`` controls whether coordinate 0 takes the departing age;
    ``refresh_older[j]`` (for positions j=1..k-1) whether that older packet is
    turned into a fake update at the departing age. Single-source models
    refresh everything; with two sources only the packets of the monitored
    source do.
    """
    src = [-1] * D
    src[0] = k if refresh_monitor else 0
    for j in range(1, k):
        if refresh_older is None or refresh_older[j - 1]:
            src[j] = k
        else:
            src[j] = j
    for j in range(k, n):
        src[j] = j + 1
    return ResetMap(src)


def build_truncated_mm1(
    discipline: Discipline,
    lams: Sequence[float],
    mu: float,
    trunc: TruncationSpec,
    source_of_interest: int = 0,
) -> ShsModel:
    """Blocking approximation of the M/M/1 queue with one or two sources.

    One source: states are the packet counts 0..N. Two sources: states are
    the ordered source-label sequences of length <= N (oldest first), so the
    chain has 2^(N+1) - 1 states. Coordinate 0 is the monitor age of
    ``source_of_interest``; packets of the other source never touch it.

    A total offered load >= mu triggers a warning (the blocking model is
    still well defined, but it no longer approximates a stable queue).
    """
    lams = [float(x) for x in lams]
    if not lams:
        raise ValueError("need at least one arrival rate")
    if any(not x > 0 for x in lams):
        raise ValueError(f"arrival rates must be > 0, got {lams}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if len(lams) > 2:
        raise ValueError("at most two sources are supported")
    if not 0 <= source_of_interest < len(lams):
        raise ValueError("source_of_interest out of range")
    if sum(lams) >= mu:
        warnings.warn(
            f"offered load {sum(lams) / mu:.3g} >= 1: the truncated model does not "
            "approximate a stable infinite queue",
            stacklevel=2,
        )

    N = trunc.max_packets
    D = N + 1
    if len(lams) == 1:
        n_states = N + 1
    else:
        if N > MAX_TWO_SOURCE_N:
            raise ValueError(
                f"two-source state count 2^(N+1)-1 is intractable beyond "
                f"N={MAX_TWO_SOURCE_N}, got N={N}"
            )
        n_states = 2 ** (N + 1) - 1
    if n_states * D > MAX_UNKNOWNS:
        raise ValueError(
            f"model too large: {n_states} states x {D} coordinates exceeds "
            f"{MAX_UNKNOWNS} unknowns"
        )

    if len(lams) == 1:
        return _truncated_single(discipline, lams[0], mu, N)
    return _truncated_two(discipline, lams, mu, N, source_of_interest)


def _truncated_single(discipline: Discipline, lam: float, mu: float, N: int) -> ShsModel:
    D = N + 1
    b = np.zeros((N + 1, D))
    for n in range(N + 1):
        b[n, : n + 1] = 1.0
    trans: list[Transition] = []
    for n in range(N + 1):
        arrival = ResetMap.identity(D, upto=n)  # new packet enters at age 0
        trans.append(Transition(lam, n, n + 1 if n < N else n, arrival))
        if n == 0:
            continue
        if discipline is Discipline.PS:
            for k in range(1, n + 1):
                trans.append(
                    Transition(mu / n, n, n - 1, _departure_reset(D, n, k, True))
                )
        else:
            trans.append(Transition(mu, n, n - 1, _departure_reset(D, n, 1, True)))
    labels = [str(n) for n in range(N + 1)]
    return ShsModel(labels=labels, b=b, transitions=trans)


def _truncated_two(
    discipline: Discipline,
    lams: Sequence[float],
    mu: float,
    N: int,
    soi: int,
) -> ShsModel:
    states: list[tuple[int, ...]] = []
    for k in range(N + 1):
        states.extend(itertools.product((0, 1), repeat=k))
    index = {s: i for i, s in enumerate(states)}
    D = N + 1
    b = np.zeros((len(states), D))
    for s, i in index.items():
        b[i, : len(s) + 1] = 1.0

    trans: list[Transition] = []
    for s, i in index.items():
        k = len(s)
        for src, lam in enumerate(lams):
            if k < N:
                trans.append(
                    Transition(lam, i, index[s + (src,)], ResetMap.identity(D, upto=k))
                )
            else:
                # blocked arrival: nothing changes
                trans.append(Transition(lam, i, i, ResetMap.identity(D, upto=k)))
        if k == 0:
            continue
        positions = range(1, k + 1) if discipline is Discipline.PS else (1,)
        rate = mu / k if discipline is Discipline.PS else mu
        for p in positions:
            target = index[s[: p - 1] + s[p:]]
            departing_is_soi = s[p - 1] == soi
            older_is_soi = [s[j - 1] == soi for j in range(1, p)]
            reset = _departure_reset(
                D, k, p,
                refresh_monitor=departing_is_soi,
                refresh_older=[departing_is_soi and o for o in older_is_soi],
            )
            trans.append(Transition(rate, i, target, reset))

    labels = ["-" if not s else "".join(str(x + 1) for x in s) for s in states]
    return ShsModel(labels=labels, b=b, transitions=trans, source_of_interest=soi)


def build_two_source_preemptive(
    lams: Sequence[float], mu: float, source_of_interest: int = 0
) -> ShsModel:
    """Single-buffer preemptive queue shared by two sources.

    Three states: empty, serving source 1, serving source 2. Any arrival
    replaces whatever is in service. Only a delivery of the monitored source
    moves coordinate 0. With the second rate sent to zero this reduces to the
    single-source preemptive buffer-1 model.
    """
    lams = [float(x) for x in lams]
    if len(lams) != 2 or any(not x > 0 for x in lams):
        raise ValueError(f"need two positive arrival rates, got {lams}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if source_of_interest not in (0, 1):
        raise ValueError("source_of_interest must be 0 or 1")

    b = np.array([(1, 0), (1, 1), (1, 1)])
    fresh = _r(0, -1)  # new packet takes over at age 0
    trans = [
        Transition(lams[0], 0, 1, fresh),
        Transition(lams[1], 0, 2, fresh),
        Transition(lams[0], 1, 1, fresh),
        Transition(lams[1], 1, 2, fresh),
        Transition(lams[0], 2, 1, fresh),
        Transition(lams[1], 2, 2, fresh),
        Transition(mu, 1, 0, _r(1, -1) if source_of_interest == 0 else _r(0, -1)),
        Transition(mu, 2, 0, _r(1, -1) if source_of_interest == 1 else _r(0, -1)),
    ]
    return ShsModel(
        labels=["-", "1", "2"], b=b, transitions=trans,
        source_of_interest=source_of_interest,
    )


@dataclass(frozen=True)
class TruncationSweep:
    """Average age as a function of the truncation size N."""

    entries: tuple[tuple[int, float], ...]
    converged: bool
    converged_at: int | None
    final_rel_diff: float


def aaoi_vs_truncation(
    discipline: Discipline,
    lams: Sequence[float],
    mu: float,
    n_list: Sequence[int],
    rel_tol: float = 1e-8,
) -> TruncationSweep:
    """Solve the truncated model at each N and report convergence.

    ``n_list`` must be strictly increasing. Convergence is declared at the
    first N whose value differs from its predecessor by less than ``rel_tol``
    in relative terms; it is observed, never assumed.
    """
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be non-empty and strictly increasing")
    entries = []
    converged = False
    converged_at = None
    prev = None
    diff = np.inf
    for N in n_list:
        model = build_truncated_mm1(discipline, lams, mu, TruncationSpec(N))
        value = solve_age_system(model).aaoi
        entries.append((N, value))
        if prev is not None:
            diff = abs(value - prev) / abs(value)
            if diff < rel_tol and not converged:
                converged = True
                converged_at = N
        prev = value
    return TruncationSweep(
        entries=tuple(entries),
        converged=converged,
        converged_at=converged_at,
        final_rel_diff=float(diff),
    )


def truncation_ladder(start: int = 8, max_n: int = 320) -> list[int]:
    """Buffer sizes to try when hunting for convergence: doubling, then +64.

    Doubling alone overshoots badly at high load (the cost of a solve grows
    like N^3), so past 128 the ladder climbs linearly.
    """
    ladder = []
    n = start
    while n <= min(128, max_n):
        ladder.append(n)
        n *= 2
    n = 192
    while n <= max_n:
        ladder.append(n)
        n += 64
    return ladder


def mm1_ps_truncated_aaoi(
    rho: float,
    mu: float = 1.0,
    rel_tol: float = 1e-6,
    start: int = 8,
    max_n: int = 320,
) -> tuple[float, int, bool]:
    """Converged truncated average age of the single-source PS queue.

    Walks the truncation ladder until two successive solves agree to
    ``rel_tol``; returns (value, last N, converged flag). The caller decides
    what to do with a non-converged point; it is never silently accepted.
    """
    if not 0 < rho:
        raise ValueError("rho must be > 0")
    lam = rho * mu
    prev = None
    value = None
    N_used = start
    for N in truncation_ladder(start, max_n):
        model = build_truncated_mm1(Discipline.PS, [lam], mu, TruncationSpec(N))
        value = solve_age_system(model).aaoi
        N_used = N
        if prev is not None and abs(value - prev) / abs(value) < rel_tol:
            return value, N, True
        prev = value
    return value, N_used, False
