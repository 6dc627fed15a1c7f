"""Undirected graphs and the chordal-graph algorithms used throughout sgm.

Nodes are integers ``0..d-1``.  Edges are stored canonically as ``(a, b)``
with ``a < b``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .errors import EdgeAbsent, NotChordal, SetsOverlap

Edge = tuple[int, int]


def canonical_edge(a: int, b: int) -> Edge:
    if a == b:
        raise ValueError(f"self-loop on node {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class UndirectedGraph:
    node_count: int
    edges: frozenset[Edge] = frozenset()
    _adj: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("a graph needs at least one node")
        canon = set()
        for a, b in self.edges:
            e = canonical_edge(int(a), int(b))
            if e[1] >= self.node_count or e[0] < 0:
                raise ValueError(f"edge {e} out of range for {self.node_count} nodes")
            canon.add(e)
        object.__setattr__(self, "edges", frozenset(canon))
        adj = [set() for _ in range(self.node_count)]
        for a, b in canon:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", tuple(frozenset(s) for s in adj))

    @classmethod
    def empty(cls, d: int) -> "UndirectedGraph":
        return cls(d)

    @classmethod
    def complete(cls, d: int) -> "UndirectedGraph":
        return cls(d, frozenset(combinations(range(d), 2)))

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def has_edge(self, a: int, b: int) -> bool:
        return a != b and b in self._adj[a]

    def is_complete(self, nodes: Iterable[int]) -> bool:
        nodes = list(nodes)
        return all(self.has_edge(a, b) for a, b in combinations(nodes, 2))

    def with_edge(self, a: int, b: int) -> "UndirectedGraph":
        return UndirectedGraph(self.node_count, self.edges | {canonical_edge(a, b)})

    def without_edge(self, a: int, b: int) -> "UndirectedGraph":
        return UndirectedGraph(self.node_count, self.edges - {canonical_edge(a, b)})

    def toggle_edge(self, a: int, b: int) -> "UndirectedGraph":
        if self.has_edge(a, b):
            return self.without_edge(a, b)
        return self.with_edge(a, b)

    def components(self) -> list[frozenset[int]]:
        seen: set[int] = set()
        comps = []
        for start in self.nodes:
            if start in seen:
                continue
            comp = {start}
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for w in self._adj[v]:
                    if w not in comp:
                        comp.add(w)
                        queue.append(w)
            seen |= comp
            comps.append(frozenset(comp))
        return comps


@dataclass(frozen=True)
class JunctionTree:
    cliques: tuple[frozenset[int], ...]
    separators: tuple[frozenset[int], ...]
    # tree_edges[k] joins cliques i and j through separators[k]
    tree_edges: tuple[tuple[int, int], ...] = ()


def _mcs_order(g: UndirectedGraph) -> list[int]:
    """Maximum cardinality search visit order (ties go to the lowest index)."""
    weight = [0] * g.node_count
    visited = [False] * g.node_count
    order = []
    for _ in range(g.node_count):
        v = max((u for u in g.nodes if not visited[u]), key=lambda u: (weight[u], -u))
        visited[v] = True
        order.append(v)
        for w in g.neighbors(v):
            if not visited[w]:
                weight[w] += 1
    return order


def _earlier_neighbourhoods(g: UndirectedGraph) -> tuple[list[int], list[frozenset[int]], bool]:
    order = _mcs_order(g)
    pos = {v: i for i, v in enumerate(order)}
    earlier = []
    ok = True
    for v in order:
        nb = frozenset(w for w in g.neighbors(v) if pos[w] < pos[v])
        # reverse MCS order is a perfect elimination ordering iff these are cliques
        if ok and not g.is_complete(nb):
            ok = False
        earlier.append(nb)
    return order, earlier, ok


def is_chordal(g: UndirectedGraph) -> bool:
    return _earlier_neighbourhoods(g)[2]


def _clique_key(c: frozenset[int]) -> tuple[int, ...]:
    return tuple(sorted(c))


def maximal_cliques(g: UndirectedGraph) -> list[frozenset[int]]:
    """Maximal cliques of a chordal graph, sorted lexicographically."""
    order, earlier, ok = _earlier_neighbourhoods(g)
    if not ok:
        raise NotChordal("graph is not chordal")
    candidates = {frozenset({v}) | nb for v, nb in zip(order, earlier)}
    cliques = [c for c in candidates if not any(c < other for other in candidates)]
    return sorted(cliques, key=_clique_key)


def junction_tree(g: UndirectedGraph) -> JunctionTree:
    """Junction tree via a maximum-weight spanning tree on clique intersections.

    Disconnected graphs are joined through empty separators, so the number of
    separators is always ``len(cliques) - 1``.
    """
    cliques = maximal_cliques(g)
    k = len(cliques)
    pairs = sorted(
        ((len(cliques[i] & cliques[j]), i, j) for i, j in combinations(range(k), 2)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    separators, tree_edges = [], []
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent[ri] = rj
        separators.append(cliques[i] & cliques[j])
        tree_edges.append((i, j))
        if len(tree_edges) == k - 1:
            break
    return JunctionTree(tuple(cliques), tuple(separators), tuple(tree_edges))


def common_neighbors(g: UndirectedGraph, edge: Edge) -> frozenset[int]:
    a, b = edge
    if not g.has_edge(a, b):
        raise EdgeAbsent(f"edge {tuple(edge)} is not in the graph")
    return g.neighbors(a) & g.neighbors(b)


def separates(g: UndirectedGraph, a: Iterable[int], b: Iterable[int], s: Iterable[int]) -> bool:
    a, b, s = set(a), set(b), set(s)
    if a & b or a & s or b & s:
        raise SetsOverlap("node sets must be pairwise disjoint")
    seen = set(a)
    queue = deque(a)
    while queue:
        v = queue.popleft()
        if v in b:
            return False
        for w in g.neighbors(v):
            if w not in seen and w not in s:
                seen.add(w)
                queue.append(w)
    return True
