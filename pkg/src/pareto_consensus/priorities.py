"""Laplacian consensus on agents' priority vectors.

Row ``i`` of a priority matrix ``W`` is agent ``i``'s weighting of all ``n``
objectives. The network update is ``W(k+1) = P W(k)`` with ``P = I - cL``,
evaluated row by row as ``w^i + c * sum_j (w^j - w^i)`` over neighbours in
index order. In that form rounding never pushes an entry below the current
minimum, so the priority floor is non-decreasing in floating point too.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsensusGainError, DimensionError, PriorityError
from .graph import Graph, GraphMatrices

INGEST_TOL = 1e-6
CONSENSUS_TOL = 1e-9
DEFAULT_GAIN_FRACTION = 0.9


@dataclass(frozen=True)
class ConsensusOperator:
    P: np.ndarray
    c: float
    # neighbour table read off P: row i lists its neighbours in increasing
    # order, padded with i itself; deg[i] entries are live
    nbr: np.ndarray = field(init=False, repr=False)
    deg: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.asarray(self.P)
        off = (P != 0.0) & ~np.eye(P.shape[0], dtype=bool)
        deg = off.sum(axis=1).astype(np.int64)
        nbr = np.tile(np.arange(P.shape[0], dtype=np.int64)[:, None], (1, max(int(deg.max(initial=0)), 1)))
        for i in range(P.shape[0]):
            nbr[i, :deg[i]] = np.flatnonzero(off[i])
        object.__setattr__(self, "nbr", nbr)
        object.__setattr__(self, "deg", deg)


def as_priority_matrix(rows, n: int | None = None, *, strict: bool = True) -> np.ndarray:
    """Validate initial priorities and return them as an ``n x n`` float array.

    Rows summing to 1 within ``1e-6`` are rescaled to sum to 1; anything worse
    is rejected. With ``strict`` every entry must lie in the open interval
    (0, 1); zero priorities toward a neighbour would leave the mixing weight
    floor undefined.
    """
    W = np.array(rows, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"priority matrix must be square, got shape {W.shape}")
    if n is not None and W.shape[0] != n:
        raise DimensionError(f"priority matrix is {W.shape[0]}x{W.shape[0]}, expected {n}x{n}")
    if not np.all(np.isfinite(W)):
        raise PriorityError("priority matrix contains non-finite entries")
    sums = W.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > INGEST_TOL:
            raise PriorityError(f"priorities of agent {i + 1} sum to {float(s)!r}, not 1 (tolerance {INGEST_TOL})")
    W = W / sums[:, None]
    if strict:
        bad = np.argwhere(W <= 0.0)
        if bad.size:
            i, j = bad[0]
            raise PriorityError(f"priority w^{i + 1}_{j + 1} = {float(W[i, j])!r} must be strictly positive")
    return W


def default_gain(gm: GraphMatrices) -> float:
    return DEFAULT_GAIN_FRACTION / gm.max_degree


def consensus_operator(gm: GraphMatrices, c: float | None = None) -> ConsensusOperator:
    """Build ``P = I - cL``; ``c`` must lie strictly inside ``(0, 1/max_degree)``."""
    if c is None:
        c = default_gain(gm)
    c = float(c)
    if not (0.0 < c < 1.0 / gm.max_degree):
        raise ConsensusGainError(c, gm.max_degree)
    n = gm.laplacian.shape[0]
    P = np.eye(n) - c * gm.laplacian
    P.flags.writeable = False
    return ConsensusOperator(P=P, c=c)


def priority_step(W: np.ndarray, op: ConsensusOperator) -> np.ndarray:
    """One network-level update ``P @ W`` in difference form.

    Bitwise identical to the compiled round update.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != op.P.shape:
        raise DimensionError(f"priority matrix shape {W.shape} does not match operator {op.P.shape}")
    acc = np.zeros_like(W)
    for t in range(op.nbr.shape[1]):
        live = (t < op.deg)[:, None]
        # padded slots point at the row itself and contribute an exact zero
        acc += np.where(live, W[op.nbr[:, t]] - W, 0.0)
    return W + op.c * acc


def priority_step_local(W: np.ndarray, g: Graph, c: float) -> np.ndarray:
    """Agent-by-agent form: ``w^i + c * sum_j h_ij (w^j - w^i)``.

    Independent of :func:`priority_step`; used to cross-check it.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (g.n, g.n):
        raise DimensionError(f"priority matrix shape {W.shape} does not match a graph on {g.n} agents")
    out = np.empty_like(W)
    for i in range(1, g.n + 1):
        acc = np.zeros(g.n)
        for j in g.neighbors(i):
            acc += W[j - 1] - W[i - 1]
        out[i - 1] = W[i - 1] + c * acc
    return out


def average_priorities(W0: np.ndarray) -> np.ndarray:
    """Common limit of every agent's priority vector: the column means of ``W0``."""
    return np.asarray(W0, dtype=float).mean(axis=0)


def eta_a(W0: np.ndarray) -> float:
    """Uniform floor on non-zero mixing weights: the smallest entry of ``W0``."""
    eta = float(np.min(W0))
    if eta <= 0.0:
        raise PriorityError(f"initial priorities must be strictly positive, minimum is {float(eta)!r}")
    return eta


def disagreement(W: np.ndarray, wbar: np.ndarray) -> float:
    """``max_i ||w^i - wbar||_inf``."""
    return float(np.max(np.abs(np.asarray(W) - wbar[None, :])))


def iterate_priorities(W0, op: ConsensusOperator, steps: int):
    """Yield ``W(1), ..., W(steps)``."""
    W = np.asarray(W0, dtype=float)
    for _ in range(steps):
        W = priority_step(W, op)
        yield W


def steps_to_consensus(W0, op: ConsensusOperator, tol: float = CONSENSUS_TOL, cap: int = 10**7) -> int:
    """First ``k`` with disagreement at most ``tol``; raises if ``cap`` is hit."""
    wbar = average_priorities(W0)
    W = np.asarray(W0, dtype=float)
    for k in range(cap + 1):
        if disagreement(W, wbar) <= tol:
            return k
        W = priority_step(W, op)
    raise PriorityError(f"no consensus within {cap} steps")
