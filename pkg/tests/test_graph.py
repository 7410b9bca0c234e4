import itertools

import numpy as np
import pytest

from pareto_consensus.errors import AgentIndexError, DisconnectedGraphError, GraphError, SelfLoopError
from pareto_consensus.graph import (
    GENERATORS,
    build_graph,
    complete,
    matrices,
    path,
    random_connected,
    ring,
    ring_plus_chords,
)


def test_two_agent_complete():
    g = build_graph(2, [(1, 2)])
    gm = matrices(g)
    np.testing.assert_array_equal(gm.adjacency, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(gm.degree, np.diag([1, 1]))
    np.testing.assert_array_equal(gm.laplacian, [[1, -1], [-1, 1]])
    assert gm.max_degree == 1


def test_path_laplacian():
    gm = matrices(build_graph(3, [(1, 2), (2, 3)]))
    np.testing.assert_array_equal(gm.laplacian, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    assert gm.max_degree == 2


def test_complete_three():
    gm = matrices(complete(3))
    np.testing.assert_array_equal(gm.degree, np.diag([2, 2, 2]))
    np.testing.assert_array_equal(gm.laplacian.sum(axis=1), 0)


def test_reversed_and_duplicate_edges_collapse():
    g = build_graph(3, [(2, 1), (1, 2), (3, 2)])
    assert g.edge_list() == [(1, 2), (2, 3)]
    assert g.has_edge(3, 2) and not g.has_edge(1, 3)
    assert g.neighbors(2) == [1, 3]


@pytest.mark.parametrize(
    "n, edges, err",
    [
        (3, [(1, 2)], DisconnectedGraphError),
        (3, [(1, 1), (1, 2), (2, 3)], SelfLoopError),
        (3, [(1, 2), (2, 4)], AgentIndexError),
        (3, [(0, 1), (1, 2)], AgentIndexError),
        (1, [], DisconnectedGraphError),
        (0, [], GraphError),
    ],
)
def test_invalid_graphs(n, edges, err):
    with pytest.raises(err):
        build_graph(n, edges)


def test_errors_are_distinct():
    assert len({SelfLoopError, AgentIndexError, DisconnectedGraphError}) == 3
    for e in (SelfLoopError, AgentIndexError, DisconnectedGraphError):
        assert issubclass(e, GraphError)


def test_matrices_read_only():
    gm = matrices(path(4))
    with pytest.raises(ValueError):
        gm.laplacian[0, 0] = 5


def _reachable_by_powers(n, edges):
    # independent oracle: (I + H)^(n-1) has no zero entry iff connected
    H = np.zeros((n, n), dtype=np.int64)
    for a, b in edges:
        H[a - 1, b - 1] = H[b - 1, a - 1] = 1
    R = np.linalg.matrix_power(np.eye(n, dtype=np.int64) + H, n - 1)
    return bool(np.all(R > 0))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_connectivity_matches_brute_force(n):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    rng = np.random.default_rng(n)
    subsets = [s for r in range(len(pairs) + 1) for s in itertools.combinations(pairs, r)]
    if len(subsets) > 400:
        subsets = [subsets[i] for i in rng.choice(len(subsets), 400, replace=False)]
    for edges in subsets:
        expected = _reachable_by_powers(n, edges)
        try:
            build_graph(n, edges)
            got = True
        except DisconnectedGraphError:
            got = False
        assert got == expected, edges


def test_six_agent_sample_matches_brute_force():
    pairs = list(itertools.combinations(range(1, 7), 2))
    rng = np.random.default_rng(6)
    for _ in range(300):
        edges = [p for p in pairs if rng.random() < 0.3]
        try:
            build_graph(6, edges)
            got = True
        except DisconnectedGraphError:
            got = False
        assert got == _reachable_by_powers(6, edges)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generators_are_valid(name):
    kwargs = {"seed": 3} if name == "random" else {}
    for n in range(2, 12):
        g = GENERATORS[name](n, **kwargs)
        gm = matrices(g)
        assert g.n == n
        np.testing.assert_array_equal(gm.adjacency, gm.adjacency.T)
        assert np.all(np.diag(gm.adjacency) == 0)
        np.testing.assert_array_equal(gm.laplacian.sum(axis=1), 0)


def test_ring_plus_chords_degree():
    g = ring_plus_chords(20, 5)
    gm = matrices(g)
    assert len(g.edges) == 40
    assert gm.max_degree == 4
    assert g.has_edge(1, 6) and g.has_edge(16, 1)


def test_ring_small_cases():
    assert ring(2).edge_list() == [(1, 2)]
    assert len(ring(5).edges) == 5


def test_random_connected_deterministic():
    assert random_connected(8, seed=4) == random_connected(8, seed=4)
