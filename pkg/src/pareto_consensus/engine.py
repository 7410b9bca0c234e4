"""Interleaved priority consensus and prioritized gradient descent.

Round ``k`` (synchronous; every agent reads round-``k`` values only):

1. ``W(k+1) = P W(k)``
2. ``A(k)`` is built from ``W(k)`` (or ``W(k+1)`` with ``a_from_updated_w``)
3. ``x^i(k+1) = sum_j a_ij(k) x^j(k) - alpha * grad f_i(x^i(k))``
4. the running sum used by ``xhat^i(k) = (1/k) sum_{h=1..k} x^i(h)`` absorbs ``x(k+1)``
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .errors import ConfigError, DimensionError, NonFiniteError, StepCapError
from .graph import Graph, matrices
from .mixing import structure
from .objectives import Objective, WeightedProblem, stack_normal_forms
from .priorities import (
    ConsensusOperator,
    as_priority_matrix,
    average_priorities,
    consensus_operator,
    eta_a,
)

L1_POLICIES = ("clip", "error")


@dataclass
class RunConfig:
    graph: Graph
    objectives: list
    W0: np.ndarray
    x0: np.ndarray
    alpha: float
    c: float | None = None
    k_max: int = 1000
    record_every: int = 100
    track_phi: bool = False
    l1_cap: float | None = None
    l1_policy: str = "clip"
    a_from_updated_w: bool = False
    name: str = ""

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dim(self) -> int:
        return np.asarray(self.x0).shape[1]


@dataclass
class RunState:
    cfg: RunConfig
    k: int
    X: np.ndarray
    S: np.ndarray
    W: np.ndarray
    Phi: np.ndarray
    op: ConsensusOperator
    eta: float
    wbar: np.ndarray
    stats: np.ndarray
    _packed: tuple = field(repr=False)
    _masks: tuple = field(repr=False)

    @property
    def xhat(self) -> np.ndarray:
        if self.k == 0:
            raise ValueError("running average is defined from k = 1")
        return self.S / self.k

    def copy(self) -> "RunState":
        return replace(self, X=self.X.copy(), S=self.S.copy(), W=self.W.copy(),
                       Phi=self.Phi.copy(), stats=self.stats.copy())


@dataclass
class RunResult:
    xhat: np.ndarray
    x_final: np.ndarray
    W_final: np.ndarray
    ks: np.ndarray
    xhat_series: np.ndarray
    objective_series: np.ndarray
    W_series: np.ndarray
    phi_series: np.ndarray | None
    eta: float
    wbar: np.ndarray
    c: float
    audit: dict
    wallclock: float
    k_max: int

    @property
    def grad_norm_max(self) -> float:
        return self.audit["grad_norm_max"]


def _validate(cfg: RunConfig):
    g = cfg.graph
    n = g.n
    if len(cfg.objectives) != n:
        raise DimensionError(f"graph has {n} agents but {len(cfg.objectives)} objectives were given")
    for i, f in enumerate(cfg.objectives, start=1):
        if not isinstance(f, Objective):
            raise ConfigError(f"objective of agent {i} is not an Objective")
    W0 = as_priority_matrix(cfg.W0, n)
    x0 = np.array(cfg.x0, dtype=float)
    if x0.ndim != 2 or x0.shape[0] != n:
        raise DimensionError(f"expected {n} initial states, got array of shape {x0.shape}")
    m = x0.shape[1]
    for i, f in enumerate(cfg.objectives, start=1):
        if f.min_dim > m:
            raise DimensionError(f"objective of agent {i} reads x_{f.min_dim} but states have dimension {m}")
    if not np.all(np.isfinite(x0)):
        bad = np.argwhere(~np.isfinite(x0))[0]
        raise ConfigError(f"initial state of agent {bad[0] + 1} is not finite")
    if not (cfg.alpha > 0 and np.isfinite(cfg.alpha)):
        raise ConfigError(f"alpha must be positive, got {cfg.alpha!r}")
    if int(cfg.k_max) != cfg.k_max or cfg.k_max < 1:
        raise ConfigError(f"k_max must be an integer >= 1, got {cfg.k_max!r}")
    if int(cfg.record_every) != cfg.record_every or cfg.record_every < 1:
        raise ConfigError(f"record_every must be an integer >= 1, got {cfg.record_every!r}")
    if cfg.l1_cap is not None and not cfg.l1_cap > 0:
        raise ConfigError(f"l1_cap must be positive when set, got {cfg.l1_cap!r}")
    if cfg.l1_policy not in L1_POLICIES:
        raise ConfigError(f"l1_policy must be one of {L1_POLICIES}, got {cfg.l1_policy!r}")
    return W0, x0


def init_run(cfg: RunConfig) -> RunState:
    """Validate ``cfg`` and return the state at ``k = 0``."""
    W0, x0 = _validate(cfg)
    op = consensus_operator(matrices(cfg.graph), cfg.c)
    quad, lin, agent, coord, coef, rate = stack_normal_forms(cfg.objectives, x0.shape[1])
    order = np.argsort(agent, kind="stable")
    ptr = np.searchsorted(agent[order], np.arange(cfg.n + 1)).astype(np.int64)
    packed = (quad, lin, ptr, coord[order].copy(), coef[order].copy(), rate[order].copy())
    Z, Ht = structure(cfg.graph)
    return RunState(
        cfg=cfg, k=0, X=x0.copy(), S=np.zeros_like(x0), W=W0.copy(), Phi=np.eye(cfg.n),
        op=op, eta=eta_a(W0), wbar=average_priorities(W0), stats=_kernel.new_stats(),
        _packed=packed, _masks=(Z, Ht),
    )


def _advance(state: RunState, n_steps: int) -> None:
    cfg = state.cfg
    info = np.zeros(4)
    Z, Ht = state._masks
    code = _kernel.advance(
        state.k, n_steps, state.op.nbr, state.op.deg, state.op.c, state.W, Z, Ht, state.X, state.S,
        *state._packed, float(cfg.alpha), float(cfg.l1_cap or 0.0), cfg.l1_policy == "error",
        bool(cfg.a_from_updated_w), bool(cfg.track_phi), state.Phi, state.stats, info,
    )
    if code == _kernel.NON_FINITE:
        raise NonFiniteError(agent=int(info[0]) + 1, coord=int(info[1]) + 1, k=int(info[2]))
    if code == _kernel.STEP_CAP:
        raise StepCapError(agent=int(info[0]) + 1, k=int(info[2]), norm=info[3], cap=cfg.l1_cap)
    state.k += n_steps


def step(state: RunState) -> RunState:
    """Return the state after one more synchronous round; ``state`` is untouched."""
    if state.k >= state.cfg.k_max:
        raise ConfigError(f"k_max={state.cfg.k_max} rounds already executed")
    nxt = state.copy()
    _advance(nxt, 1)
    return nxt


def sample_points(k_max: int, record_every: int) -> np.ndarray:
    """``k = 1``, every multiple of ``record_every``, and ``k_max``."""
    ks = set(range(record_every, k_max + 1, record_every))
    ks.update({1, k_max})
    return np.array(sorted(ks), dtype=np.int64)


def audit_summary(stats: np.ndarray) -> dict:
    return {
        "row_sum_dev": float(stats[_kernel.ROW_SUM_DEV]),
        "off_pattern_max": float(stats[_kernel.OFF_PATTERN_MAX]),
        "min_in_pattern": float(stats[_kernel.MIN_IN_PATTERN]),
        "floor_margin": float(stats[_kernel.FLOOR_MARGIN]),
        "grad_norm_max": float(stats[_kernel.GRAD_NORM_MAX]),
        "step_norm_max": float(stats[_kernel.STEP_NORM_MAX]),
        "clip_count": int(stats[_kernel.CLIP_COUNT]),
    }


def batch_values(problem: WeightedProblem, X: np.ndarray) -> np.ndarray:
    """Weighted objective at each row of ``X``."""
    nf = problem.normal_form()
    X = np.asarray(X, dtype=float)
    vals = np.einsum("ip,pq,iq->i", X, nf.quad, X) + X @ nf.lin + nf.const
    if nf.exp_coord.size:
        vals = vals + np.exp(X[:, nf.exp_coord] * nf.exp_rate) @ nf.exp_coef
    return vals


def weighted_problem(cfg: RunConfig, weights) -> WeightedProblem:
    return WeightedProblem(objectives=tuple(cfg.objectives), weights=np.asarray(weights), dim=cfg.dim)


def run(cfg: RunConfig) -> RunResult:
    """Execute ``k_max`` rounds and sample the running averages.

    ``objective_series[s, i]`` is ``sum_j wbar_j f_j(xhat^i(ks[s]))``.
    """
    t0 = time.perf_counter()
    state = init_run(cfg)
    ks = sample_points(cfg.k_max, cfg.record_every)
    n, m = state.X.shape
    xhat_series = np.empty((ks.size, n, m))
    W_series = np.empty((ks.size, n, n))
    phi_series = np.empty((ks.size, n, n)) if cfg.track_phi else None
    for s, k in enumerate(ks):
        _advance(state, int(k) - state.k)
        xhat_series[s] = state.S / k
        W_series[s] = state.W
        if phi_series is not None:
            phi_series[s] = state.Phi
    problem = weighted_problem(cfg, state.wbar)
    objective_series = np.array([batch_values(problem, xh) for xh in xhat_series])
    return RunResult(
        xhat=state.S / cfg.k_max, x_final=state.X.copy(), W_final=state.W.copy(), ks=ks,
        xhat_series=xhat_series, objective_series=objective_series, W_series=W_series,
        phi_series=phi_series, eta=state.eta, wbar=state.wbar, c=state.op.c,
        audit=audit_summary(state.stats), wallclock=time.perf_counter() - t0, k_max=cfg.k_max,
    )


@dataclass
class SweepPoint:
    wbar: np.ndarray
    xhat: np.ndarray
    values: np.ndarray
    weighted: float
    index: int  # position in the input list
    result: RunResult = field(repr=False)


def pareto_sweep(base: RunConfig, priority_list) -> list[SweepPoint]:
    """One run per initial priority matrix, ordered by the first limit priority.

    Front points are evaluated at the agents' mean running average.
    """
    points = []
    for idx, W0 in enumerate(priority_list):
        res = run(replace(base, W0=np.asarray(W0, dtype=float)))
        xh = res.xhat.mean(axis=0)
        vals = np.array([f.evaluate(xh) for f in base.objectives])
        points.append(SweepPoint(wbar=res.wbar, xhat=xh, values=vals,
                                 weighted=float(res.wbar @ vals), index=idx, result=res))
    points.sort(key=lambda p: p.wbar[0])
    return points
