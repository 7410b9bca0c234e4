"""Acceptance suite: one PASS/FAIL line per criterion at its pinned tolerance.

Lines are printed as each test runs and repeated in the terminal summary.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import scenario1_config
from pareto_consensus import fixtures
from pareto_consensus.cli import main
from pareto_consensus.engine import RunConfig, pareto_sweep, run, weighted_problem
from pareto_consensus.graph import matrices, random_connected
from pareto_consensus.mixing import accumulate_transition, build_mixing, limit_decomposition, seed_transition
from pareto_consensus.objectives import WeightedProblem, centralized_minimize, fd_check, quadratic_minimizer
from pareto_consensus.priorities import average_priorities, consensus_operator, eta_a, priority_step
from pareto_consensus.scenario import load_scenario
from pareto_consensus.verify import (
    bound_checks,
    bound_series,
    geometric_rate_samples,
    limit_checks,
    replay_audit,
)

LINES: list[str] = []

ROWS = range(1, 21)
WBAR_TOL = 1e-3
XHAT_TOL = 0.15
F_REL_TOL = 0.01
XSTAR_TOL = 0.02
RUNTIME_LIMIT = 10.0
ROW_SUM_TOL = 1e-12
CONSENSUS_TOL = 1e-9
LIMIT_TOL = 1e-12
POWER_TOL = 1e-10
PHI_TOL = 1e-8
FD_TOL = 1e-5
FD_STEP = 1e-6
FD_BOX = 500.0


def report(criterion: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
    LINES.append(line)
    print(line)
    assert passed, line


def random_priorities(rng, n):
    W = rng.uniform(0.05, 1.0, (n, n))
    return W / W.sum(axis=1, keepdims=True)


@pytest.fixture(scope="module")
def sweep():
    base = scenario1_config(1)
    t0 = time.perf_counter()
    points = pareto_sweep(base, [np.array(w) for w in fixtures.SCENARIO1_PRIORITIES])
    elapsed = time.perf_counter() - t0
    return sorted(points, key=lambda p: p.index), elapsed


@pytest.fixture(scope="module")
def scenario2():
    cfg = load_scenario("builtin:scenario2").config
    return cfg, run(cfg)


def _closed_form(wbar):
    return quadratic_minimizer(WeightedProblem(fixtures.scenario1_objectives(), wbar, 1))[0]


def test_1a_limit_priorities(sweep):
    points, _ = sweep
    errs = [np.max(np.abs(p.wbar - ref[:2])) for p, ref in zip(points, fixtures.SCENARIO1_RESULTS)]
    report("1a", max(errs) <= WBAR_TOL, f"max |wbar - reference| = {max(errs):.2e} over 20 settings (tol {WBAR_TOL})")


def test_1b_running_average_matches_reference(sweep):
    points, _ = sweep
    errs = [float(np.max(np.abs(p.result.xhat[:, 0] - ref[3]))) for p, ref in zip(points, fixtures.SCENARIO1_RESULTS)]
    bad = [i + 1 for i, e in enumerate(errs) if e > XHAT_TOL]
    report("1b", not bad, f"max |xhat - reference| = {max(errs):.4g} (tol {XHAT_TOL}), settings over tol: {bad}")


def test_1c_weighted_value_matches_reference(sweep):
    points, _ = sweep
    rels = []
    for p, ref in zip(points, fixtures.SCENARIO1_RESULTS):
        prob = weighted_problem(scenario1_config(1), p.wbar)
        vals = [prob.value(x) for x in p.result.xhat]
        rels.append(max(abs(v - ref[5]) / abs(ref[5]) for v in vals))
    bad = [i + 1 for i, r in enumerate(rels) if r > F_REL_TOL]
    report("1c", not bad, f"max relative error = {max(rels):.4g} (tol {F_REL_TOL}), settings over tol: {bad}")


def test_1d_running_average_near_minimizer(sweep):
    points, _ = sweep
    errs = [float(np.max(np.abs(p.result.xhat[:, 0] - _closed_form(p.wbar)))) for p in points]
    bad = [i + 1 for i, e in enumerate(errs) if e > XSTAR_TOL]
    report("1d", not bad, f"max |xhat - x*(wbar)| = {max(errs):.4g} (tol {XSTAR_TOL}), settings over tol: {bad}")


def test_1_runtime(sweep):
    _, elapsed = sweep
    report("1 runtime", elapsed < RUNTIME_LIMIT, f"20 runs of 100000 rounds in {elapsed:.2f} s (limit {RUNTIME_LIMIT:g} s)")


def test_2_front_monotone(sweep):
    points, _ = sweep
    front = sorted(points, key=lambda p: p.wbar[0])
    f1 = np.array([p.values[0] for p in front])
    f2 = np.array([p.values[1] for p in front])
    d1, d2 = np.diff(f1), np.diff(f2)
    bad1 = [int(front[i + 1].index) + 1 for i in np.flatnonzero(d1 >= 0)]
    bad2 = [int(front[i + 1].index) + 1 for i in np.flatnonzero(d2 <= 0)]
    report("2", not bad1 and not bad2,
           f"f1 not decreasing into settings {bad1}, f2 not increasing into settings {bad2}")


def test_3_consensus_properties():
    rng = np.random.default_rng(3)
    worst_row, worst_floor, worst_gap = 0.0, np.inf, 0.0
    for seed in range(100):
        n = int(rng.integers(2, 11))
        g = random_connected(n, seed)
        W = random_priorities(rng, n)
        wbar = average_priorities(W)
        op = consensus_operator(matrices(g))
        for _ in range(10_000):
            W_next = priority_step(W, op)
            worst_floor = min(worst_floor, float(W_next.min() - W.min()))
            W = W_next
            worst_row = max(worst_row, float(np.max(np.abs(W.sum(axis=1) - 1.0))))
        worst_gap = max(worst_gap, float(np.max(np.abs(W - wbar))))
    ok = worst_row <= ROW_SUM_TOL and worst_floor >= 0.0 and worst_gap <= CONSENSUS_TOL
    report("3", ok, f"100 graphs: max row-sum dev {worst_row:.2e}, min floor change {worst_floor:.2e}, "
                    f"max |W - 1 wbar'| {worst_gap:.2e}")


def test_4_mixing_audit(scenario2):
    cfgs = [scenario1_config(r) for r in ROWS] + [scenario2[0]]
    rng = np.random.default_rng(4)
    for seed in range(20):
        n = int(rng.integers(2, 11))
        cfgs.append(RunConfig(graph=random_connected(n, seed), objectives=[], W0=random_priorities(rng, n),
                              x0=np.zeros((n, 1)), alpha=0.1, k_max=10_000))
    worst_row, worst_off, worst_floor = 0.0, 0.0, np.inf
    for cfg in cfgs:
        a = replay_audit(cfg)
        worst_row = max(worst_row, a["row_sum_dev"])
        worst_off = max(worst_off, a["off_pattern_max"])
        worst_floor = min(worst_floor, a["min_in_pattern"] - a["eta"])
    s2 = scenario2[1].audit
    worst_row = max(worst_row, s2["row_sum_dev"])
    worst_off = max(worst_off, s2["off_pattern_max"])
    worst_floor = min(worst_floor, s2["min_in_pattern"] - scenario2[1].eta)
    ok = worst_row <= ROW_SUM_TOL and worst_off == 0.0 and worst_floor >= 0.0
    report("4", ok, f"{len(cfgs)} runs: max row-sum dev {worst_row:.2e}, max off-pattern {worst_off:.1e}, "
                    f"min (entry - eta_A) {worst_floor:.2e}")


def _phi_after(g, W0, rounds):
    op = consensus_operator(matrices(g))
    W = W0
    tp = None
    for k in range(rounds):
        M = build_mixing(g, W, k)
        tp = seed_transition(M) if tp is None else accumulate_transition(tp, M)
        W = priority_step(W, op)
    return tp.Phi


def test_5_limit_identities():
    rng = np.random.default_rng(5)
    worst = dict(wc=0.0, cw=0.0, power=0.0, rho=0.0, phi=0.0)
    for seed in range(50):
        n = int(rng.integers(2, 9))
        g = random_connected(n, seed)
        W0 = random_priorities(rng, n)
        cfg = RunConfig(graph=g, objectives=[], W0=W0, x0=np.zeros((n, 1)), alpha=0.1, k_max=1)
        checks = {c.name: c for c in limit_checks(cfg)}
        dec = limit_decomposition(g, average_priorities(W0), eta_a(W0))
        Wb, C = dec.Wbar, dec.C
        worst["wc"] = max(worst["wc"], float(np.max(np.abs(Wb @ C))))
        worst["cw"] = max(worst["cw"], float(np.max(np.abs(C @ Wb))))
        worst["power"] = max(worst["power"], float(checks["limit (Wbar+C)^r = Wbar^r + C^r"].detail.split(": ")[1]))
        worst["rho"] = max(worst["rho"], float(checks["limit spectral radius of C < 1"].detail.split("= ")[1].split()[0]))
        Phi = _phi_after(g, W0, 5000)
        worst["phi"] = max(worst["phi"], float(np.max(np.abs(Phi - average_priorities(W0)[None, :]))))
    parts = {
        "W C": worst["wc"] <= LIMIT_TOL, "C W": worst["cw"] <= LIMIT_TOL,
        "powers": worst["power"] <= POWER_TOL, "rho(C)": worst["rho"] < 1.0,
        "Phi(k,0) -> 1 wbar'": worst["phi"] <= PHI_TOL,
    }
    failing = [k for k, v in parts.items() if not v]
    report("5", not failing,
           f"50 graphs: |W C| {worst['wc']:.1e}, |C W| {worst['cw']:.1e}, power residual {worst['power']:.1e}, "
           f"max rho(C) {worst['rho']:.4f}, max |Phi(5000,0) - 1 wbar'| {worst['phi']:.3e}; failing: {failing}")


def test_6_geometric_rate(scenario2):
    cfgs = [scenario1_config(r) for r in ROWS] + [scenario2[0]]
    count, bad, worst = 0, 0, 0.0
    for cfg in cfgs:
        for _, _, dev, bnd in geometric_rate_samples(cfg):
            count += 1
            bad += dev > bnd
            worst = max(worst, dev / bnd)
    report("6", bad == 0, f"{count} sampled (k, s) pairs, {bad} violations, max deviation/bound {worst:.3e}")


def test_7_performance_bound(scenario2):
    failures = []
    for r in ROWS:
        for c in bound_checks(bound_series(scenario1_config(r))):
            if not c.passed:
                failures.append(f"setting {r}: {c.name}")
    cfg, res = scenario2
    x0 = np.asarray(cfg.x0).mean(axis=0)
    xstar = centralized_minimize(weighted_problem(cfg, res.wbar), x0=x0, tol=1e-8)
    for c in bound_checks(bound_series(cfg, res, xstar)):
        if not c.passed:
            failures.append(f"scenario 2: {c.name}")
    report("7", not failures, f"21 runs checked, failures: {failures}")


def test_8_scenario2_convergence(scenario2):
    cfg, res = scenario2
    x0 = np.asarray(cfg.x0).mean(axis=0)
    prob = weighted_problem(cfg, res.wbar)
    xstar = centralized_minimize(prob, x0=x0, tol=1e-8)
    gap = (res.objective_series - prob.value(xstar)).max(axis=1)
    ratio = gap[-1] / gap[0]
    late = gap[res.ks >= cfg.k_max // 100]
    mono = bool(np.all(np.diff(late) <= 0))
    report("8", ratio < 0.01 and mono,
           f"final/initial gap {ratio:.4g} (need < 0.01), non-increasing after k = {cfg.k_max // 100}: {mono}")


def test_9_gradients():
    rng = np.random.default_rng(9)
    objectives = [(f"scenario1 f{i}", f, 1) for i, f in enumerate(fixtures.scenario1_objectives(), 1)]
    objectives += [(f"scenario2 f{i}", f, 10) for i, f in enumerate(fixtures.scenario2_objectives(), 1)]
    worst, failing = 0.0, []
    for label, f, m in objectives:
        errs = [fd_check(f, x, h=FD_STEP) for x in rng.uniform(-FD_BOX, FD_BOX, (100, m))]
        worst = max(worst, max(errs))
        over = sum(e > FD_TOL for e in errs)
        if over:
            failing.append(f"{label} ({over}/100, {sum(not np.isfinite(e) for e in errs)} overflowed)")
    report("9", not failing, f"22 objectives x 100 points in [-{FD_BOX:g}, {FD_BOX:g}]^m, h = {FD_STEP:g}: "
                             f"max fd error {worst:.2e} (tol {FD_TOL:g}); failing: {failing}")


def test_10_determinism(tmp_path):
    same = []
    for name in ("scenario1-row1", "scenario2"):
        outs = []
        for threads in ("1", "8"):
            out = tmp_path / f"{name}-{threads}.csv"
            assert main(["run", "--scenario", f"builtin:{name}", "--threads", threads, "--out", str(out)]) == 0
            outs.append(out.read_bytes() + (tmp_path / f"{name}-{threads}.summary.csv").read_bytes())
        same.append(outs[0] == outs[1])
    report("10", all(same), f"byte-identical outputs for scenario1 row 1 and scenario2: {same}")
