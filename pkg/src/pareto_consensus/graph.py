"""Static undirected communication topology and its matrix views.

Agents are labelled 1..n in every public signature; arrays are indexed from 0.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import AgentIndexError, DisconnectedGraphError, GraphError, SelfLoopError


@dataclass(frozen=True)
class Graph:
    """Connected, undirected, self-loop-free graph on agents 1..n.

    ``edges`` holds each unordered pair once as ``(i, j)`` with ``i < j``.
    Build instances through :func:`build_graph`, which validates them.
    """

    n: int
    edges: frozenset

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> list[int]:
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class GraphMatrices:
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    max_degree: int


def _reachable_from_first(n: int, edges: Iterable[tuple[int, int]]) -> set[int]:
    nbrs: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    seen = {1}
    queue = deque([1])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Validate an edge list (1-based pairs) and return a :class:`Graph`.

    Duplicate and reversed pairs collapse to one undirected edge.

    Raises:
        GraphError: ``n`` is not a positive integer.
        SelfLoopError: a pair ``(i, i)`` was supplied.
        AgentIndexError: an index falls outside ``1..n``.
        DisconnectedGraphError: some agent cannot reach another.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise GraphError(f"agent count must be a positive integer, got {n!r}")
    n = int(n)
    canon = set()
    for pair in edges:
        i, j = (int(v) for v in pair)
        if i == j:
            raise SelfLoopError(f"self-loop ({i}, {i}) is not allowed")
        for v in (i, j):
            if not 1 <= v <= n:
                raise AgentIndexError(f"agent index {v} outside 1..{n} in edge ({i}, {j})")
        canon.add((min(i, j), max(i, j)))
    if n == 1:
        raise DisconnectedGraphError("a single agent has no admissible edge set; need n >= 2")
    reached = _reachable_from_first(n, canon)
    if len(reached) != n:
        missing = sorted(set(range(1, n + 1)) - reached)
        raise DisconnectedGraphError(f"graph is not connected; agents {missing} unreachable from agent 1")
    return Graph(n=n, edges=frozenset(canon))


def matrices(g: Graph) -> GraphMatrices:
    """Adjacency H, degree matrix, Laplacian ``L = degree - H`` and the max degree."""
    H = np.zeros((g.n, g.n))
    for a, b in g.edges:
        H[a - 1, b - 1] = 1.0
        H[b - 1, a - 1] = 1.0
    deg = H.sum(axis=1)
    D = np.diag(deg)
    L = D - H
    for arr in (H, D, L):
        arr.flags.writeable = False
    return GraphMatrices(adjacency=H, degree=D, laplacian=L, max_degree=int(deg.max()))


# -- named generators -------------------------------------------------------

def complete(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def path(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(1, n)])


def ring(n: int) -> Graph:
    if n < 3:
        return path(n)
    return build_graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def ring_plus_chords(n: int, stride: int = 5) -> Graph:
    """Ring over 1..n plus chords ``(i, i + stride mod n)``."""
    edges = [(i, i % n + 1) for i in range(1, n + 1)] if n >= 3 else [(1, 2)]
    if stride % n:
        edges += [(i, (i - 1 + stride) % n + 1) for i in range(1, n + 1)]
    edges = [(a, b) for a, b in edges if a != b]
    return build_graph(n, edges)


def random_connected(n: int, seed: int, extra_edge_prob: float = 0.3) -> Graph:
    """Random spanning tree plus independent extra edges; used by tests and ``--seed``."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n) + 1
    edges = []
    for pos in range(1, n):
        parent = order[rng.integers(0, pos)]
        edges.append((int(order[pos]), int(parent)))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < extra_edge_prob:
                edges.append((i, j))
    return build_graph(n, edges)


GENERATORS = {
    "complete": complete,
    "path": path,
    "ring": ring,
    "ring_plus_chords": ring_plus_chords,
    "random": random_connected,
}
