"""Linear age solver for Markov queue models with coordinate-selection resets.

A model couples a finite continuous-time Markov chain (the discrete state,
e.g. queue occupancy) with a vector of age coordinates that grow at unit rate
while the chain sits in a state and are remapped linearly at each transition.
Coordinate 0 is always the monitor age of the source of interest.

For such systems the average age is obtained from two linear solves:

1. the stationary distribution ``pi`` of the chain, and
2. the age-correlation vectors ``v_q`` (units: time x probability), one per
   state, satisfying for every state q

       v_q * (total rate out of q) =
           b_q * pi_q + sum over transitions l entering q of
                        rate_l * (v_source(l) mapped through the reset of l)

   where ``b_q`` flags which coordinates grow in state q. The average age is
   then ``sum_q v_q[0]``. The method applies whenever this system has a
   nonnegative solution.

Self-loop transitions are legal; they enter both sides of the equation (and
cancel exactly when their reset is the identity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg
from scipy.sparse import csgraph

# Above this many unknowns the age system is solved with sparse LU.
DENSE_UNKNOWN_LIMIT = 2000

BALANCE_RESIDUAL_TOL = 1e-12
AGE_RESIDUAL_TOL = 1e-10
NEGATIVITY_TOL = 1e-9


class StructureError(ValueError):
    """The discrete chain is not a single communicating class (or is otherwise malformed)."""


class SolverError(RuntimeError):
    """A linear solve failed or did not meet its residual target."""


class NonnegativityError(RuntimeError):
    """The age system solved but has negative entries: the method does not apply."""


class ResetMap:
    """Pure coordinate selection: each output coordinate copies one input or is zeroed.

    ``source[j] = i`` means the new coordinate j takes the old coordinate i;
    ``source[j] = -1`` means it is reset to zero. This is exactly a {0,1}
    matrix with at most one 1 per row.
    """

    __slots__ = ("source", "out_idx", "src_idx")

    def __init__(self, source):
        src = tuple(int(s) for s in source)
        if any(s < -1 for s in src):
            raise ValueError("reset entries must be -1 (zero) or a coordinate index")
        object.__setattr__(self, "source", src)
        out = np.flatnonzero(np.asarray(src) >= 0).astype(np.int64)
        object.__setattr__(self, "out_idx", out)
        object.__setattr__(
            self, "src_idx", np.asarray([src[j] for j in out], dtype=np.int64)
        )

    def __setattr__(self, name, value):  # immutable after construction
        raise AttributeError("ResetMap is immutable")

    def __eq__(self, other):
        return isinstance(other, ResetMap) and self.source == other.source

    def __hash__(self):
        return hash(self.source)

    def __repr__(self):
        return f"ResetMap({self.source})"

    @property
    def dim(self) -> int:
        return len(self.source)

    @classmethod
    def identity(cls, dim: int, upto: int | None = None) -> "ResetMap":
        """Copy coordinates 0..upto, zero the rest (all, if upto is None)."""
        hi = dim - 1 if upto is None else upto
        return cls(tuple(j if j <= hi else -1 for j in range(dim)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map an age vector through the reset (handy for tests and traces)."""
        out = np.zeros(self.dim)
        out[self.out_idx] = np.asarray(x)[self.src_idx]
        return out

    def render(self) -> str:
        """Right-hand side of the map as printed in a transition table."""
        return "[" + ",".join(f"x{s}" if s >= 0 else "0" for s in self.source) + "]"


@dataclass(frozen=True)
class Transition:
    rate: float
    frm: int
    to: int
    reset: ResetMap

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"transition rate must be > 0, got {self.rate}")


@dataclass
class ShsModel:
    """Finite Markov chain plus per-state growth flags and reset transitions.

    Parameters
    ----------
    labels : list of str
        Human-readable state names, also used by :func:`dump_table`.
    b : (S, D) array of 0/1
        Growth flags; ``b[q, j] = 1`` iff coordinate j grows at unit rate in
        state q. Column 0 must be all ones (the monitor age always grows).
    transitions : list of Transition
        Rates must be strictly positive; resets must have dimension D.
    source_of_interest : int
        Which source coordinate 0 monitors (informational, for multi-source
        builders).
    """

    labels: list[str]
    b: np.ndarray
    transitions: list[Transition]
    source_of_interest: int = 0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.ndim != 2:
            raise ValueError("b must be a 2-d array (states x coordinates)")
        if len(self.labels) != self.b.shape[0]:
            raise ValueError("labels and b disagree on the number of states")
        if not np.all((self.b == 0) | (self.b == 1)):
            raise ValueError("b entries must be 0 or 1")
        if not np.all(self.b[:, 0] == 1):
            raise ValueError("b[q, 0] must be 1 for every state")
        S, D = self.b.shape
        for t in self.transitions:
            if not (0 <= t.frm < S and 0 <= t.to < S):
                raise ValueError(f"transition endpoints out of range: {t}")
            if t.reset.dim != D:
                raise ValueError(f"reset dimension {t.reset.dim} != age dimension {D}")
        out_deg = np.zeros(S, dtype=int)
        for t in self.transitions:
            out_deg[t.frm] += 1
        if np.any(out_deg == 0):
            dead = [self.labels[q] for q in np.flatnonzero(out_deg == 0)]
            raise StructureError(f"states with no outgoing transition: {dead}")

    @property
    def n_states(self) -> int:
        return self.b.shape[0]

    @property
    def age_dim(self) -> int:
        return self.b.shape[1]

    def outgoing_rates(self) -> np.ndarray:
        """Total rate leaving each state, self-loops included."""
        r = np.zeros(self.n_states)
        for t in self.transitions:
            r[t.frm] += t.rate
        return r


@dataclass(frozen=True)
class AgeSystemSolution:
    """Stationary distribution, age-correlation vectors, and the average age."""

    pi: np.ndarray
    v: np.ndarray
    aaoi: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "aaoi", float(self.v[:, 0].sum()))


def _generator(m: ShsModel) -> np.ndarray:
    Q = np.zeros((m.n_states, m.n_states))
    for t in m.transitions:
        if t.frm != t.to:
            Q[t.frm, t.to] += t.rate
            Q[t.frm, t.frm] -= t.rate
    return Q


def _check_irreducible(m: ShsModel) -> None:
    S = m.n_states
    if S == 1:
        return
    rows = [t.frm for t in m.transitions if t.frm != t.to]
    cols = [t.to for t in m.transitions if t.frm != t.to]
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(S, S))
    ncomp, _ = csgraph.connected_components(adj, directed=True, connection="strong")
    if ncomp != 1:
        raise StructureError(
            f"chain is not irreducible: {ncomp} strongly connected components"
        )


def stationary_distribution(m: ShsModel) -> np.ndarray:
    """Stationary probabilities of the discrete chain.

    Solves the global balance equations with the normalization constraint;
    the scaled balance residual must come out below 1e-12.
    """
    _check_irreducible(m)
    S = m.n_states
    if S == 1:
        return np.ones(1)
    Q = _generator(m)
    A = Q.T.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(S)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular balance system: {exc}") from exc
    scale = max(1.0, float(np.abs(Q).max()))
    residual = float(np.abs(pi @ Q).max()) / scale
    if residual > BALANCE_RESIDUAL_TOL or np.any(pi < -BALANCE_RESIDUAL_TOL):
        raise SolverError(f"balance residual {residual:.2e} exceeds tolerance")
    return np.clip(pi, 0.0, None)


def _assemble_age_system(m: ShsModel, pi: np.ndarray):
    S, D = m.n_states, m.age_dim
    n = S * D
    out_rate = m.outgoing_rates()

    diag_rows = np.arange(n, dtype=np.int64)
    diag_vals = np.repeat(out_rate, D)
    rows = [diag_rows]
    cols = [diag_rows]
    vals = [diag_vals]
    for t in m.transitions:
        if t.reset.out_idx.size == 0:
            continue
        rows.append(t.to * D + t.reset.out_idx)
        cols.append(t.frm * D + t.reset.src_idx)
        vals.append(np.full(t.reset.out_idx.size, -t.rate))
    M = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    M.sum_duplicates()
    rhs = (m.b * pi[:, None]).ravel()
    return M, rhs


def solve_age_system(m: ShsModel, pi: np.ndarray | None = None) -> AgeSystemSolution:
    """Solve the age-correlation system and return pi, v, and the average age.

    Dense LU is used up to 2000 unknowns, sparse LU above. Each equation's
    relative residual must be at most 1e-10 and the solution must be
    nonnegative, otherwise the model is rejected.

    Raises
    ------
    SolverError
        Singular system or residual above tolerance.
    NonnegativityError
        Negative v entries beyond rounding noise; the average-age method does
        not apply to the model as posed.
    """
    if pi is None:
        pi = stationary_distribution(m)
    M, rhs = _assemble_age_system(m, pi)
    n = M.shape[0]
    try:
        if n <= DENSE_UNKNOWN_LIMIT:
            lu_piv = linalg.lu_factor(M.toarray())
            solve = lambda b: linalg.lu_solve(lu_piv, b)
        else:
            lu = splinalg.splu(M.tocsc())
            solve = lu.solve
        v = solve(rhs)
        # two rounds of iterative refinement squeeze the backward error down
        # to rounding level even when the LU alone falls short of the target
        for _ in range(2):
            if not np.all(np.isfinite(v)):
                break
            v = v + solve(rhs - M @ v)
    except (np.linalg.LinAlgError, linalg.LinAlgError, RuntimeError) as exc:
        raise SolverError(f"age system solve failed for model: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise SolverError("age system produced non-finite values (singular system?)")

    # componentwise backward error with a normwise floor: rows whose natural
    # scale is negligible against the system (states of vanishing probability)
    # are judged against the global scale instead of their own rounding noise
    resid = np.abs(M @ v - rhs)
    scale = np.abs(M) @ np.abs(v) + np.abs(rhs)
    denom = np.maximum(scale + 1e-8 * float(scale.max() if scale.size else 0.0), 1e-300)
    worst = float((resid / denom).max())
    if worst > AGE_RESIDUAL_TOL:
        raise SolverError(f"age system residual {worst:.2e} exceeds {AGE_RESIDUAL_TOL}")

    vmat = v.reshape(m.n_states, m.age_dim)
    floor = -NEGATIVITY_TOL * max(1.0, float(np.abs(vmat).max()))
    if vmat.min() < floor:
        raise NonnegativityError(
            f"age system has negative components (min {vmat.min():.3e}); "
            "method not applicable to this model"
        )
    return AgeSystemSolution(pi=pi, v=np.clip(vmat, 0.0, None))


def dump_table(m: ShsModel) -> str:
    """Plain-text transition table, one row per transition.

    Columns, in order: ``l`` (transition index), ``rate``, ``from``, ``to``,
    ``reset`` rendered as ``[old ages] -> [new ages]`` with the occupied
    coordinates of each endpoint state spelled out.
    """
    lines = ["l, rate, from, to, reset"]
    for l, t in enumerate(m.transitions):
        left = "[" + ",".join(
            f"x{j}" if m.b[t.frm, j] else "0" for j in range(m.age_dim)
        ) + "]"
        lines.append(
            f"{l}, {t.rate:.12g}, {m.labels[t.frm]}, {m.labels[t.to]}, "
            f"{left}->{t.reset.render()}"
        )
    return "\n".join(lines) + "\n"
