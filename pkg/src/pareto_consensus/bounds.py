"""Performance-bound constants and the per-iteration optimality-gap bound.

The gradient bound ``L`` is the largest local gradient norm seen along the run
(all agents, all rounds). ``m`` in the bound formulas is the agent count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import RunConfig, RunResult
from .errors import ConfigError
from .priorities import eta_a


@dataclass(frozen=True)
class BoundReport:
    eta: float
    B0: int
    Omega: float
    beta: float
    one_minus_beta_root: float  # 1 - beta^(1/B0)
    C1: float
    C2: float
    L: float
    alpha: float
    m: int
    dist0: float
    phi_min: float
    phi_norm_sq: float


def _one_minus_beta_root(eta: float, B0: int) -> float:
    # stays accurate when eta^B0 is far below machine epsilon
    return -math.expm1(math.log1p(-(eta**B0)) / B0)


def bound_constants(cfg: RunConfig, result: RunResult, xstar) -> BoundReport:
    """All constants of the gap bound for a finished run and an oracle minimiser ``xstar``."""
    if xstar is None:
        raise ConfigError("an oracle minimiser is required to compute dist(y(0), X*)")
    xstar = np.asarray(xstar, dtype=float)
    x0 = np.asarray(cfg.x0, dtype=float)
    n = x0.shape[0]
    eta = eta_a(cfg.W0)
    B0 = n - 1
    with np.errstate(over="ignore"):
        Omega = 1.0 + eta ** (-B0)
    beta = 1.0 - eta**B0
    omb = _one_minus_beta_root(eta, B0)
    phi = np.asarray(result.wbar, dtype=float)
    phi_min = float(phi.min())
    phi_norm_sq = float(phi @ phi)
    m = n
    max_x0 = float(np.max(np.linalg.norm(x0, axis=1)))
    C1 = 1.0 + 2.0 * max_x0 * (2.0 / phi_min + 1.0)
    C2 = 8.0 * m * (1.0 + m * Omega / (beta * omb)) + phi_norm_sq * m
    y0 = phi @ x0
    return BoundReport(
        eta=eta, B0=B0, Omega=Omega, beta=beta, one_minus_beta_root=omb, C1=C1, C2=C2,
        L=result.audit["grad_norm_max"], alpha=float(cfg.alpha), m=m,
        dist0=float(np.linalg.norm(y0 - xstar)), phi_min=phi_min, phi_norm_sq=phi_norm_sq,
    )


def performance_bound(r: BoundReport, k) -> float | np.ndarray:
    """Upper bound on ``f(xhat^i(k)) - f(x*)``; accepts a scalar or an array of ``k``."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise ValueError("the bound is defined for k >= 1")
    a, L, m = r.alpha, r.L, r.m
    with np.errstate(over="ignore"):
        t1 = m * m * L * r.Omega * r.C1 / (k_arr * r.beta * r.one_minus_beta_root)
        t2 = a * L * L * r.C2 / (2.0 * r.phi_min)
        t3 = (r.dist0 + a * m * L) ** 2 / (2.0 * k_arr * a * r.phi_min)
        t4 = 2.0 * a * m * L * L / k_arr
        out = t1 + t2 + t3 + t4
    return float(out) if np.ndim(out) == 0 else out


def bound_limit(r: BoundReport) -> float:
    """``k -> infinity`` value of :func:`performance_bound`."""
    return r.alpha * r.L**2 * r.C2 / (2.0 * r.phi_min)


def asymptotic_bound(r: BoundReport, W0) -> float:
    """Limit-superior bound using the weight floor ``min W0`` in place of ``min phi``."""
    with np.errstate(over="ignore"):
        return r.alpha * r.L**2 * r.C2 / (2.0 * eta_a(W0))


def observed_gaps(result: RunResult, f_star: float) -> np.ndarray:
    """``f(xhat^i(k)) - f(x*)`` for every sample and agent."""
    return result.objective_series - f_star
