from dataclasses import replace

import numpy as np
import pytest

from conftest import scenario1_config
from pareto_consensus import fixtures
from pareto_consensus.engine import (
    RunConfig,
    batch_values,
    init_run,
    pareto_sweep,
    run,
    sample_points,
    step,
    weighted_problem,
)
from pareto_consensus.errors import (
    ConfigError,
    DimensionError,
    DisconnectedGraphError,
    NonFiniteError,
    PriorityError,
    StepCapError,
)
from pareto_consensus.graph import build_graph, complete, matrices, random_connected
from pareto_consensus.mixing import mix, structure
from pareto_consensus.objectives import (
    AffineQuadratic1D,
    ExponentialSum,
    Linear,
    QuadraticForm,
    SumOfSquares,
)
from pareto_consensus.priorities import as_priority_matrix, consensus_operator, eta_a, priority_step


def test_init_scenario1():
    st = init_run(scenario1_config(7))
    assert st.k == 0
    assert st.eta == pytest.approx(0.433)
    np.testing.assert_allclose(st.wbar, [0.452, 0.548])


def test_init_rejections():
    cfg = scenario1_config()
    with pytest.raises(DimensionError, match="2 agents but 3 objectives"):
        init_run(replace(cfg, objectives=[*cfg.objectives, cfg.objectives[0]]))
    with pytest.raises(PriorityError, match="agent 2"):
        init_run(replace(cfg, W0=np.array([[0.5, 0.5], [0.5, 0.6]])))
    with pytest.raises(DimensionError):
        init_run(replace(cfg, x0=np.zeros((3, 1))))
    with pytest.raises(ConfigError):
        init_run(replace(cfg, alpha=0.0))
    with pytest.raises(ConfigError):
        init_run(replace(cfg, l1_policy="ignore"))
    with pytest.raises(DisconnectedGraphError):
        build_graph(1, [])


def test_first_step_by_hand():
    st = step(init_run(scenario1_config(1)))
    x1 = 0.134 * 485 + 0.866 * 200 - 2e-5 * 1880
    x2 = 0.022 * 485 + 0.978 * 200 - 2e-5 * 10 * (200 + 275)
    np.testing.assert_allclose(st.X[:, 0], [x1, x2], rtol=0, atol=1e-12)
    np.testing.assert_allclose(st.xhat, st.X)


def test_step_is_pure():
    s0 = init_run(scenario1_config(1))
    X0 = s0.X.copy()
    s1 = step(s0)
    assert s0.k == 0 and s1.k == 1
    np.testing.assert_array_equal(s0.X, X0)


def test_fixed_point_with_zero_gradients():
    g = random_connected(5, 1)
    zero = Linear(coords=(1, 2), coeffs=(0.0, 0.0))
    W0 = np.full((5, 5), 0.2)
    x0 = np.tile([3.0, -2.0], (5, 1))
    res = run(RunConfig(graph=g, objectives=[zero] * 5, W0=W0, x0=x0, alpha=0.1, k_max=50))
    np.testing.assert_allclose(res.x_final, x0, rtol=0, atol=1e-14)


def test_k_max_one_average_is_first_iterate():
    res = run(scenario1_config(3, k_max=1))
    np.testing.assert_array_equal(res.xhat, res.x_final)
    assert list(res.ks) == [1]


def test_sample_points():
    assert list(sample_points(250, 100)) == [1, 100, 200, 250]
    assert list(sample_points(1, 100)) == [1]


def _reference_run(cfg):
    """Plain numpy transcription of the round update."""
    g = cfg.graph
    op = consensus_operator(matrices(g), cfg.c)
    Z, Ht = structure(g)
    W = np.array(cfg.W0, dtype=float)
    X = np.array(cfg.x0, dtype=float)
    S = np.zeros_like(X)
    for _ in range(cfg.k_max):
        W_next = op.P @ W
        A = mix(W_next if cfg.a_from_updated_w else W, Z, Ht)
        D = np.array([f.gradient(x) for f, x in zip(cfg.objectives, X)])
        X = A @ X - cfg.alpha * D
        W = W_next
        S += X
    return X, S / cfg.k_max, W


@pytest.mark.parametrize("from_updated", [False, True])
def test_kernel_matches_numpy_reference(from_updated):
    rng = np.random.default_rng(21)
    for seed in range(6):
        n = int(rng.integers(2, 7))
        g = random_connected(n, seed)
        pool = [
            SumOfSquares(coords=(1, 2, 3)),
            QuadraticForm(coords=(1, 3), matrix=((2.0, 0.5), (0.5, 1.0))),
            ExponentialSum(terms=((1.0, 0.5, 2), (0.3, -1.0, 3))),
            AffineQuadratic1D(coord=2, a=1.5, center=1.0),
            Linear(coords=(1, 2, 3), coeffs=(0.2, -0.1, 0.3)),
        ]
        objs = [pool[int(i)] for i in rng.integers(0, len(pool), n)]
        W0 = rng.uniform(0.05, 1, (n, n))
        W0 /= W0.sum(axis=1, keepdims=True)
        cfg = RunConfig(graph=g, objectives=objs, W0=W0, x0=rng.uniform(-2, 2, (n, 3)), alpha=0.01,
                        k_max=300, record_every=50, a_from_updated_w=from_updated)
        X, xhat, W = _reference_run(cfg)
        res = run(cfg)
        np.testing.assert_allclose(res.x_final, X, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(res.xhat, xhat, rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(res.W_final, W, rtol=0, atol=1e-14)


def test_kernel_floor_audit_matches_numpy_on_random_graphs():
    rng = np.random.default_rng(5)
    for seed in range(15):
        n = int(rng.integers(2, 9))
        g = random_connected(n, seed)
        W0 = rng.uniform(0.02, 1, (n, n))
        W0 = as_priority_matrix(W0 / W0.sum(axis=1, keepdims=True))
        cfg = RunConfig(graph=g, objectives=[SumOfSquares(coords=(1,))] * n, W0=W0,
                        x0=np.zeros((n, 1)), alpha=0.1, k_max=400)
        res = run(cfg)
        op = consensus_operator(matrices(g))
        W, worst = W0.copy(), np.inf
        Z, Ht = structure(g)
        min_in = np.inf
        for _ in range(400):
            A = mix(W, Z, Ht)
            min_in = min(min_in, A[Z > 0].min())
            W_next = priority_step(W, op)
            worst = min(worst, W_next.min() - W.min())
            W = W_next
        assert res.audit["floor_margin"] == worst
        assert res.audit["floor_margin"] >= 0.0
        assert res.audit["min_in_pattern"] == pytest.approx(min_in, abs=1e-15)
        assert res.audit["min_in_pattern"] >= eta_a(W0)
        assert res.audit["off_pattern_max"] == 0.0
        assert res.audit["row_sum_dev"] <= 1e-12


def test_non_finite_reports_agent_and_round():
    blow = ExponentialSum(terms=((1.0, 1.0, 1),))
    cfg = RunConfig(graph=complete(2), objectives=[SumOfSquares(coords=(1,)), blow],
                    W0=np.full((2, 2), 0.5), x0=np.array([[0.0], [710.0]]), alpha=1.0, k_max=10)
    with pytest.raises(NonFiniteError) as ei:
        run(cfg)
    assert (ei.value.agent, ei.value.coord, ei.value.k) == (2, 1, 0)


def test_step_cap_error_and_clip():
    cfg = scenario1_config(1, k_max=200, l1_cap=1e-3, l1_policy="error")
    with pytest.raises(StepCapError) as ei:
        run(cfg)
    assert ei.value.agent == 1 and ei.value.k == 0
    res = run(replace(cfg, l1_policy="clip"))
    assert res.audit["step_norm_max"] <= 1e-3 * (1 + 1e-12)
    assert res.audit["clip_count"] > 0


def test_updated_w_ordering_changes_first_mix():
    base = scenario1_config(1, k_max=1)
    a = run(base).x_final
    b = run(replace(base, a_from_updated_w=True)).x_final
    assert not np.allclose(a, b)


def test_runs_are_bitwise_repeatable():
    import numba

    from pareto_consensus.cli import _set_threads

    cfg = scenario1_config(5, k_max=5000)
    a = run(cfg)
    _set_threads(1)
    b = run(cfg)
    _set_threads(numba.config.NUMBA_NUM_THREADS)
    np.testing.assert_array_equal(a.xhat_series, b.xhat_series)
    np.testing.assert_array_equal(a.objective_series, b.objective_series)


def test_batch_values_matches_scalar():
    cfg = replace(scenario1_config(2))
    p = weighted_problem(cfg, [0.3, 0.7])
    X = np.array([[1.0], [-50.0], [300.0]])
    np.testing.assert_allclose(batch_values(p, X), [p.value(x) for x in X], rtol=1e-14)


def test_sweep_duplicates_and_singletons():
    base = scenario1_config(1, k_max=2000)
    W = [np.array(fixtures.SCENARIO1_PRIORITIES[i]) for i in (4, 1, 4)]
    pts = pareto_sweep(base, W)
    assert [p.index for p in pts] == [1, 0, 2]
    np.testing.assert_array_equal(pts[1].xhat, pts[2].xhat)
    assert pts[1].weighted == pts[2].weighted
    assert len(pareto_sweep(base, W[:1])) == 1
