"""Undirected communication graphs with the self-loop convention.

Every agent always has access to its own value, so the self-pair (i, i)
is an implied member of the edge set; all constructors add it. Node
indices are 1-based at the I/O boundary (edge lists, graph files, CLI)
and 0-based internally.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "from_edge_list",
    "is_connected",
    "er_random",
    "add_agents",
    "read_graph",
    "write_graph",
]


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph on nodes 0..n-1, self-loops included.

    ``edges`` stores canonically ordered pairs (i <= j), self-pairs
    included. ``neighbor_sets[i]`` is N_i, which always contains i.
    """

    n: int
    edges: frozenset
    neighbor_sets: tuple

    def neighbors(self, i: int) -> frozenset:
        """N_i, including i itself."""
        return self.neighbor_sets[i]

    def proper_neighbors(self, i: int) -> frozenset:
        return self.neighbor_sets[i] - {i}

    def degree(self, i: int) -> int:
        """Number of proper (non-self) neighbors of i."""
        return len(self.neighbor_sets[i]) - 1

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def num_proper_edges(self) -> int:
        return sum(1 for i, j in self.edges if i != j)

    def support_mask(self) -> np.ndarray:
        """n x n array of {0.0, 1.0}: 1 where an edge (incl. self) allows
        a nonzero weight."""
        mask = np.zeros((self.n, self.n))
        for i, j in self.edges:
            mask[i, j] = 1.0
            mask[j, i] = 1.0
        return mask

    def adjacency(self) -> np.ndarray:
        """Alias of support_mask; diagonal is 1 by the self-loop rule."""
        return self.support_mask()


def _build(n: int, proper_pairs) -> Graph:
    """Assemble a Graph from 0-based non-self pairs."""
    edges = {(i, i) for i in range(n)}
    for i, j in proper_pairs:
        if i == j:
            continue
        edges.add((min(i, j), max(i, j)))
    nbrs = [{i} for i in range(n)]
    for i, j in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    return Graph(n=n, edges=frozenset(edges),
                 neighbor_sets=tuple(frozenset(s) for s in nbrs))


def from_edge_list(n: int, pairs) -> Graph:
    """Build a graph from 1-based node pairs.

    Self-loops are added for every node and the symmetric closure is
    applied; duplicate pairs collapse.
    """
    if n <= 0:
        raise ValueError(f"agent count must be positive, got {n}")
    zero_based = []
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i},{j}) out of range 1..{n}")
        zero_based.append((i - 1, j - 1))
    return _build(n, zero_based)


def is_connected(g: Graph) -> bool:
    """True iff one component spans all nodes (breadth-first search)."""
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g.neighbor_sets[i]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == g.n


def er_random(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi graph: each non-self pair kept with probability p.

    Pairs are visited in lexicographic order with one uniform variate
    each, so a fixed seed reproduces the same edge set.
    """
    if n <= 0:
        raise ValueError(f"agent count must be positive, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                pairs.append((i, j))
    return _build(n, pairs)


def add_agents(g: Graph, new_count: int, attach_pairs) -> Graph:
    """Grow the graph by new_count agents, wired per attach_pairs.

    attach_pairs are 1-based over the enlarged index range 1..n+new_count.
    New nodes get self-loops; connectivity of the result is up to the
    caller to check.
    """
    if new_count < 0:
        raise ValueError("new_count must be nonnegative")
    total = g.n + new_count
    existing = [(i, j) for i, j in g.edges if i != j]
    for i, j in attach_pairs:
        if not (1 <= i <= total and 1 <= j <= total):
            raise ValueError(f"attachment ({i},{j}) out of range 1..{total}")
        existing.append((i - 1, j - 1))
    return _build(total, existing)


def read_graph(path) -> Graph:
    """Parse the plain-text graph format: first line n, then 1-based
    `i j` lines for non-self edges (self-loops implied)."""
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"empty graph file: {path}")
    n = int(tokens[0])
    rest = tokens[1:]
    if len(rest) % 2 != 0:
        raise ValueError(f"odd number of edge indices in {path}")
    pairs = [(int(rest[k]), int(rest[k + 1])) for k in range(0, len(rest), 2)]
    return from_edge_list(n, pairs)


def write_graph(g: Graph, path) -> None:
    """Inverse of read_graph; only non-self edges are emitted."""
    lines = [str(g.n)]
    for i, j in sorted(g.edges):
        if i != j:
            lines.append(f"{i + 1} {j + 1}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
