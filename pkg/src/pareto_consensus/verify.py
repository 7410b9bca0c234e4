"""Self-checks of a scenario against the algorithm's guarantees.

Each check yields a :class:`Check`; the CLI prints one PASS/FAIL line per check.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import bounds
from .engine import RunConfig, RunResult, run, weighted_problem
from .graph import matrices
from .mixing import (
    MixingMatrix,
    accumulate_transition,
    geometric_bound,
    limit_decomposition,
    mix,
    seed_transition,
    spectral_radius,
    structure,
    transition_limit,
)
from .objectives import oracle_minimizer
from .priorities import (
    as_priority_matrix,
    average_priorities,
    consensus_operator,
    eta_a,
    priority_step,
    steps_to_consensus,
)

ROW_SUM_TOL = 1e-12
LIMIT_RESIDUAL_TOL = 1e-12
POWER_RESIDUAL_TOL = 1e-10
PHI_LIMIT_TOL = 1e-8
GEOMETRIC_FLOOR = 1e-12
CYCLE_WINDOW = 8

MixingHook = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    informational: bool = False

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"{tag} {self.name}" + (f": {self.detail}" if self.detail else "")


def replay_audit(cfg: RunConfig, hook: MixingHook | None = None) -> dict:
    """Rebuild every ``A(k)``, ``k < k_max``, from the priorities and audit it.

    Without a ``hook``, replay stops once ``W`` returns bitwise to one of
    the last few states: every later ``A`` then repeats one already audited.
    """
    g = cfg.graph
    W = as_priority_matrix(cfg.W0, g.n)
    eta = eta_a(W)
    op = consensus_operator(matrices(g), cfg.c)
    Z, Ht = structure(g)
    inside = Z > 0
    worst_row, worst_off, min_in, floor_drop = 0.0, 0.0, np.inf, np.inf
    rounds = 0
    # rounding can leave W cycling through a few states instead of settling
    recent = deque([W.tobytes()], maxlen=CYCLE_WINDOW)
    for k in range(cfg.k_max):
        W_next = priority_step(W, op)
        A = mix(W_next if cfg.a_from_updated_w else W, Z, Ht)
        if hook is not None:
            A = hook(k, A)
        worst_row = max(worst_row, float(np.max(np.abs(A.sum(axis=1) - 1.0))))
        worst_off = max(worst_off, float(np.max(np.abs(A[~inside]), initial=0.0)))
        min_in = min(min_in, float(np.min(A[inside])))
        floor_drop = min(floor_drop, float(W_next.min() - W.min()))
        rounds = k + 1
        key = W_next.tobytes()
        if hook is None and key in recent:
            break
        recent.append(key)
        W = W_next
    return {"eta": eta, "row_sum_dev": worst_row, "off_pattern_max": worst_off,
            "min_in_pattern": min_in, "floor_margin": floor_drop, "rounds_replayed": rounds}


def assumption_checks(audit: dict, label: str) -> list[Check]:
    eta = audit["eta"]
    return [
        Check(f"{label} row-stochastic A(k)", audit["row_sum_dev"] <= ROW_SUM_TOL,
              f"max |row sum - 1| = {audit['row_sum_dev']:.3e} (tol {ROW_SUM_TOL:g})"),
        Check(f"{label} sparsity matches graph", audit["off_pattern_max"] == 0.0,
              f"max |a_ij| off closed neighbourhoods = {audit['off_pattern_max']:.3e}"),
        Check(f"{label} weights >= eta_A", audit["min_in_pattern"] >= eta,
              f"min in-pattern entry {audit['min_in_pattern']:.6g} vs eta_A {eta:.6g}"),
        Check(f"{label} priority floor non-decreasing", audit["floor_margin"] >= 0.0,
              f"smallest change of min W(k) = {audit['floor_margin']:.3e}"),
    ]


def limit_checks(cfg: RunConfig, r_max: int = 20) -> list[Check]:
    g = cfg.graph
    W0 = as_priority_matrix(cfg.W0, g.n)
    dec = limit_decomposition(g, average_priorities(W0), eta_a(W0))
    Wb, C = dec.Wbar, dec.C
    wc = float(np.max(np.abs(Wb @ C)))
    cw = float(np.max(np.abs(C @ Wb)))
    worst = 0.0
    lhs, wr, cr = Wb + C, Wb.copy(), C.copy()
    Ab = lhs.copy()
    for _ in range(2, r_max + 1):
        lhs, wr, cr = lhs @ Ab, wr @ Wb, cr @ C
        worst = max(worst, float(np.max(np.abs(lhs - wr - cr))))
    rho = spectral_radius(C)
    return [
        Check("limit Wbar C = 0", wc <= LIMIT_RESIDUAL_TOL, f"||Wbar C||_max = {wc:.3e}"),
        Check("limit C Wbar = 0", cw <= LIMIT_RESIDUAL_TOL, f"||C Wbar||_max = {cw:.3e}"),
        Check("limit (Wbar+C)^r = Wbar^r + C^r", worst <= POWER_RESIDUAL_TOL,
              f"max residual over r=2..{r_max}: {worst:.3e}"),
        Check("limit spectral radius of C < 1", rho.converged and rho.value < 1.0,
              f"rho(C) = {rho.value:.12g}" + ("" if rho.converged else " (estimate did not converge)")),
        Check("limit min phi >= eta_A", dec.phi.min() >= eta_a(W0),
              f"min phi = {dec.phi.min():.6g}, eta_A = {eta_a(W0):.6g}"),
    ]


def _mixings_from(cfg: RunConfig, W_s, s: int, count: int):
    g = cfg.graph
    op = consensus_operator(matrices(g), cfg.c)
    Z, Ht = structure(g)
    W = W_s
    for k in range(s, s + count):
        W_next = priority_step(W, op)
        yield MixingMatrix(A=mix(W_next if cfg.a_from_updated_w else W, Z, Ht), k=k)
        W = W_next


def priorities_at(cfg: RunConfig, s: int) -> np.ndarray:
    op = consensus_operator(matrices(cfg.graph), cfg.c)
    W = as_priority_matrix(cfg.W0, cfg.graph.n)
    for _ in range(s):
        W = priority_step(W, op)
    return W


def geometric_horizon(eta: float, n: int, floor: float = GEOMETRIC_FLOOR, cap: int = 2000) -> int:
    """Largest ``k - s`` (up to ``cap``) at which the geometric bound is still above ``floor``."""
    h = 0
    while h < cap and geometric_bound(eta, n, h + 1, 0) >= floor:
        h += 1
    return h


def geometric_rate_samples(cfg: RunConfig, starts=(0, 1, 2, 5, 10, 50), horizon: int | None = None):
    """Yield ``(s, k, deviation, bound)`` with deviation ``max |Phi(k,s) - 1 phi(s)'|``."""
    g = cfg.graph
    W0 = as_priority_matrix(cfg.W0, g.n)
    eta = eta_a(W0)
    op = consensus_operator(matrices(g), cfg.c)
    H = geometric_horizon(eta, g.n) if horizon is None else horizon
    for s in starts:
        W_s = priorities_at(cfg, s)
        phi_s = transition_limit(g, W_s, op, from_updated=cfg.a_from_updated_w)
        tp = None
        for M in _mixings_from(cfg, W_s, s, H + 1):
            tp = seed_transition(M) if tp is None else accumulate_transition(tp, M)
            dev = float(np.max(np.abs(tp.Phi - phi_s[None, :])))
            yield s, tp.k, dev, geometric_bound(eta, g.n, tp.k, s)


def transition_checks(cfg: RunConfig) -> list[Check]:
    g = cfg.graph
    W0 = as_priority_matrix(cfg.W0, g.n)
    wbar = average_priorities(W0)
    op = consensus_operator(matrices(g), cfg.c)
    worst_ratio, violations, count = 0.0, 0, 0
    for _, _, dev, bnd in geometric_rate_samples(cfg):
        count += 1
        if dev > bnd:
            violations += 1
        worst_ratio = max(worst_ratio, dev / bnd if bnd > 0 else np.inf)
    s_late = steps_to_consensus(W0, op, tol=1e-14)
    phi_late = transition_limit(g, priorities_at(cfg, s_late), op, from_updated=cfg.a_from_updated_w)
    late_dev = float(np.max(np.abs(phi_late - wbar)))
    phi0 = transition_limit(g, W0, op, from_updated=cfg.a_from_updated_w)
    return [
        Check("geometric rate |Phi(k,s) - 1 phi(s)| <= bound", violations == 0,
              f"{count} sampled (k,s) pairs, {violations} violations, max deviation/bound {worst_ratio:.3e}"),
        Check("Phi(k,s) -> 1 wbar once priorities agree", late_dev <= PHI_LIMIT_TOL,
              f"s = {s_late}: max |phi(s) - wbar| = {late_dev:.3e} (tol {PHI_LIMIT_TOL:g})"),
        Check("limit row of Phi(k,0)", True,
              f"phi(0) = {np.array2string(phi0, precision=6, max_line_width=10**6)}, max |phi(0) - wbar| = "
              f"{np.max(np.abs(phi0 - wbar)):.3e}", informational=True),
    ]


@dataclass
class BoundSeries:
    ks: np.ndarray
    gaps: np.ndarray  # (samples, agents)
    bound: np.ndarray
    asymptote: float
    report: bounds.BoundReport
    f_star: float
    xstar: np.ndarray


def bound_series(cfg: RunConfig, result: RunResult | None = None, xstar=None) -> BoundSeries:
    result = run(cfg) if result is None else result
    problem = weighted_problem(cfg, result.wbar)
    if xstar is None:
        xstar = oracle_minimizer(problem, x0=np.asarray(cfg.x0, dtype=float).mean(axis=0))
    f_star = problem.value(xstar)
    rep = bounds.bound_constants(cfg, result, xstar)
    return BoundSeries(
        ks=result.ks, gaps=bounds.observed_gaps(result, f_star),
        bound=bounds.performance_bound(rep, result.ks),
        asymptote=bounds.asymptotic_bound(rep, cfg.W0), report=rep, f_star=f_star,
        xstar=np.asarray(xstar),
    )


def bound_checks(series: BoundSeries) -> list[Check]:
    below = series.gaps <= series.bound[:, None]
    mono = bool(np.all(series.bound[1:] <= series.bound[:-1]))
    final_gap = float(series.gaps[-1].max())
    return [
        Check("performance bound holds", bool(below.all()),
              f"{int((~below).sum())} of {below.size} (k, agent) samples exceed the bound"),
        Check("performance bound non-increasing", mono),
        Check("asymptotic bound >= final gap", series.asymptote >= final_gap,
              f"asymptote {series.asymptote:.6g}, gap at k_max {final_gap:.6g}"),
    ]


def verify_matrix(cfg: RunConfig, hook: MixingHook | None = None) -> list[Check]:
    """Every matrix-level check plus the performance bound."""
    cfg_phi = replace(cfg, track_phi=True)
    result = run(cfg_phi)
    kernel_audit = dict(result.audit, eta=result.eta)
    checks = assumption_checks(replay_audit(cfg, hook), "replayed")
    checks += assumption_checks(kernel_audit, "engine")
    checks += limit_checks(cfg)
    checks += transition_checks(cfg)
    checks += bound_checks(bound_series(cfg, result))
    return checks
