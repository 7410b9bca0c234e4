"""Row-stochastic mixing matrices built from priorities, and their products.

``A(k) = Z o W(k) + diag(rowsum(W(k) o Htilde))`` with ``Z = H + I`` (closed
neighbourhoods) and ``Htilde = J - Z`` (non-neighbours). Priorities an agent
holds for agents it cannot hear are folded into its own diagonal weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PriorityError, SpanMismatchError
from .graph import Graph, matrices
from .priorities import ConsensusOperator, priority_step


@dataclass(frozen=True)
class MixingMatrix:
    A: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class TransitionProduct:
    """``Phi(k, s) = A(k) A(k-1) ... A(s)``."""

    Phi: np.ndarray
    s: int
    k: int


@dataclass(frozen=True)
class LimitDecomposition:
    Abar: np.ndarray
    Wbar: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class SpectralRadius:
    value: float
    converged: bool
    iterations: int


def structure(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """``(Z, Htilde)``: closed-neighbourhood mask and its complement."""
    H = matrices(g).adjacency
    Z = H + np.eye(g.n)
    return Z, 1.0 - Z


def mix(W: np.ndarray, Z: np.ndarray, Htilde: np.ndarray) -> np.ndarray:
    A = Z * W
    A[np.diag_indices_from(A)] += (W * Htilde).sum(axis=1)
    return A


def build_mixing(g: Graph, W, k: int = 0) -> MixingMatrix:
    W = np.asarray(W, dtype=float)
    if W.shape != (g.n, g.n):
        raise DimensionError(f"priority matrix shape {W.shape} does not match a graph on {g.n} agents")
    Z, Ht = structure(g)
    return MixingMatrix(A=mix(W, Z, Ht), k=k)


def limit_decomposition(g: Graph, wbar, eta: float | None = None) -> LimitDecomposition:
    """Split the limiting mixing matrix as ``Abar = Wbar + C`` with ``C = Q + F``.

    ``Q`` is diagonal with ``Q_ii = sum_k Wbar_ik Htilde_ik`` and
    ``F = -Wbar o Htilde``. When ``eta`` is given it is checked against
    ``min(wbar)``.
    """
    wbar = np.asarray(wbar, dtype=float)
    if wbar.shape != (g.n,):
        raise DimensionError(f"wbar has shape {wbar.shape}, expected ({g.n},)")
    if np.any(wbar <= 0.0):
        raise PriorityError(f"limit priorities must be strictly positive, got {wbar}")
    if abs(wbar.sum() - 1.0) > 1e-9:
        raise PriorityError(f"limit priorities sum to {float(wbar.sum())!r}, not 1")
    if eta is not None and wbar.min() < eta:
        raise PriorityError(f"min(wbar)={float(wbar.min())!r} below eta_A={float(eta)!r}")
    Z, Ht = structure(g)
    Wbar = np.tile(wbar, (g.n, 1))
    Q = np.diag((Wbar * Ht).sum(axis=1))
    F = -Wbar * Ht
    C = Q + F
    return LimitDecomposition(Abar=Wbar + C, Wbar=Wbar, C=C, Q=Q, F=F, phi=wbar.copy())


def seed_transition(A: MixingMatrix) -> TransitionProduct:
    return TransitionProduct(Phi=A.A.copy(), s=A.k, k=A.k)


def accumulate_transition(phi: TransitionProduct, A: MixingMatrix) -> TransitionProduct:
    """Extend ``Phi(k, s)`` to ``Phi(k+1, s) = A(k+1) Phi(k, s)``."""
    if A.k != phi.k + 1:
        raise SpanMismatchError(f"cannot extend Phi({phi.k}, {phi.s}) with A({A.k}); need A({phi.k + 1})")
    return TransitionProduct(Phi=A.A @ phi.Phi, s=phi.s, k=A.k)


def geometric_bound(eta: float, n: int, k: int, s: int) -> float:
    """Bound on ``|[Phi(k,s)]_ij - phi_j(s)|`` for ``k >= s``."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    if n < 2:
        raise ValueError("need at least two agents")
    if k < s:
        raise ValueError(f"need k >= s, got k={k}, s={s}")
    B0 = n - 1
    floor = eta**B0
    if floor == 0.0:
        return math.inf
    return 2.0 * (1.0 + eta**-B0) / (1.0 - floor) * (1.0 - floor) ** ((k - s) / B0)


def spectral_radius(M, tol: float = 1e-10, max_iter: int = 64) -> SpectralRadius:
    """Spectral radius via ``||M^(2^j)||^(1/2^j)`` with renormalised squaring.

    Handles complex dominant pairs, which plain vector power iteration does
    not. ``converged`` is False when the relative change never drops below
    ``tol`` within ``max_iter`` squarings.
    """
    B = np.array(M, dtype=float)
    norm = np.linalg.norm(B, 2)
    if norm == 0.0:
        return SpectralRadius(0.0, True, 0)
    B /= norm
    log_norm = math.log(norm)
    est = norm
    for j in range(1, max_iter + 1):
        B = B @ B
        s = np.linalg.norm(B, 2)
        if s == 0.0:
            return SpectralRadius(0.0, True, j)
        B /= s
        log_norm = 2.0 * log_norm + math.log(s)
        new = math.exp(log_norm / 2.0**j)
        if abs(new - est) <= tol * max(new, 1e-300):
            return SpectralRadius(new, True, j)
        est = new
    return SpectralRadius(est, False, max_iter)


def mixing_sequence(g: Graph, W0, op: ConsensusOperator, count: int, *, from_updated: bool = False):
    """Yield ``MixingMatrix`` objects ``A(0) .. A(count-1)`` by replaying priorities.

    With ``from_updated`` round ``k`` mixes with ``W(k+1)`` instead of ``W(k)``.
    """
    Z, Ht = structure(g)
    W = np.asarray(W0, dtype=float)
    for k in range(count):
        W_next = priority_step(W, op)
        yield MixingMatrix(A=mix(W_next if from_updated else W, Z, Ht), k=k)
        W = W_next


def transition_limit(g: Graph, W_s, op: ConsensusOperator, *, from_updated: bool = False,
                     tol: float = 4 * np.finfo(float).eps, cap: int = 10**6) -> np.ndarray:
    """Common row ``phi(s) = lim_k Phi(k, s)`` for the run whose priorities at round ``s`` are ``W_s``.

    Priorities are replayed until successive rounds differ by at most
    ``tol``. From then on every ``A(k)`` equals the limit ``Abar``, whose left
    fixed vector is ``wbar``, so the answer is ``wbar A(K-1) ... A(s)``.
    """
    Z, Ht = structure(g)
    W = np.asarray(W_s, dtype=float)
    mats = []
    for _ in range(cap):
        W_next = priority_step(W, op)
        settled = np.max(np.abs(W_next - W)) <= tol
        mats.append(mix(W_next if from_updated else W, Z, Ht))
        W = W_next
        if settled:
            break
    else:
        raise PriorityError(f"priorities did not settle within {cap} rounds")
    v = W.mean(axis=0)
    for A in reversed(mats):
        v = v @ A
    return v


def audit_mixing(A, Z, eta: float) -> dict:
    """Row-sum deviation, largest off-pattern magnitude and smallest in-pattern entry of one ``A(k)``."""
    A = np.asarray(A)
    inside = Z > 0
    return {
        "row_sum_dev": float(np.max(np.abs(A.sum(axis=1) - 1.0))),
        "off_pattern_max": float(np.max(np.abs(A[~inside]), initial=0.0)),
        "min_in_pattern": float(np.min(A[inside])),
        "eta": eta,
    }
