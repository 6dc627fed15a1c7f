"""Stratified graphs: a chordal graph plus per-edge strata of contexts.

A context on edge ``{a, b}`` fixes the values of every common neighbour of
``a`` and ``b``; in that context ``X_a`` and ``X_b`` are independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import gcd
from typing import Iterable, Mapping

from .distribution import mask_of, nodes_of
from .errors import ContextKeysMismatch, EdgeAbsent, EmptyConditioningSet, NotChordal
from .graph import Edge, UndirectedGraph, canonical_edge, common_neighbors, is_chordal


class Context:
    """Immutable assignment of binary values to a set of nodes."""

    __slots__ = ("items",)

    def __init__(self, assignment: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        pairs = assignment.items() if isinstance(assignment, Mapping) else assignment
        items = tuple(sorted((int(k), int(v)) for k, v in pairs))
        if len({k for k, _ in items}) != len(items):
            raise ValueError("duplicate node in context")
        if any(v not in (0, 1) for _, v in items):
            raise ValueError("context values must be 0 or 1")
        object.__setattr__(self, "items", items)

    def __setattr__(self, name, value):
        raise AttributeError("Context is immutable")

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(k for k, _ in self.items)

    @property
    def ones(self) -> frozenset[int]:
        return frozenset(k for k, v in self.items if v)

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def values(self) -> tuple[int, ...]:
        return tuple(v for _, v in self.items)

    def __reduce__(self):
        return (Context, (self.items,))

    def __eq__(self, other):
        return isinstance(other, Context) and self.items == other.items

    def __lt__(self, other):
        return self.items < other.items

    def __hash__(self):
        return hash(self.items)

    def __repr__(self):
        return f"Context({dict(self.items)})"


Instance = tuple[Edge, Context]


@dataclass(frozen=True)
class Stratum:
    edge: Edge
    contexts: frozenset[Context]

    def __post_init__(self):
        object.__setattr__(self, "edge", canonical_edge(*self.edge))
        object.__setattr__(self, "contexts", frozenset(self.contexts))
        if not self.contexts:
            raise ValueError(f"stratum on {self.edge} has no contexts")


@dataclass(frozen=True)
class StratifiedGraph:
    graph: UndirectedGraph
    strata: tuple[Stratum, ...] = ()

    def __post_init__(self):
        merged: dict[Edge, set[Context]] = {}
        for s in self.strata:
            merged.setdefault(s.edge, set()).update(s.contexts)
        strata = tuple(Stratum(e, frozenset(c)) for e, c in sorted(merged.items()))
        object.__setattr__(self, "strata", strata)

    @classmethod
    def from_instances(cls, graph: UndirectedGraph, instances: Iterable[Instance]) -> "StratifiedGraph":
        return cls(graph, tuple(Stratum(e, frozenset([c])) for e, c in instances))

    def instances(self) -> list[Instance]:
        """Every (edge, context) pair in (edge, context) lexicographic order."""
        return [(s.edge, c) for s in self.strata for c in sorted(s.contexts)]

    @property
    def d(self) -> int:
        return self.graph.node_count

    def key(self) -> tuple:
        """Hashable canonical form, used for caching and equality of states."""
        return (
            self.graph.node_count,
            tuple(self.graph.sorted_edges()),
            tuple((e, c.items) for e, c in self.instances()),
        )

    def without_strata(self) -> "StratifiedGraph":
        return StratifiedGraph(self.graph)


def all_instances(graph: UndirectedGraph) -> list[Instance]:
    """Every context that could be added to a stratum of ``graph``."""
    out = []
    for edge in graph.sorted_edges():
        nbrs = sorted(common_neighbors(graph, edge))
        if not nbrs:
            continue
        for values in product((0, 1), repeat=len(nbrs)):
            out.append((edge, Context(zip(nbrs, values))))
    return out


def validate(sg: StratifiedGraph) -> None:
    """Raise if ``sg`` is not a proper stratified graph; return None otherwise."""
    g = sg.graph
    if not is_chordal(g):
        raise NotChordal("underlying graph is not chordal")
    for s in sg.strata:
        if not g.has_edge(*s.edge):
            raise EdgeAbsent(f"stratum on missing edge {s.edge}")
        nbrs = common_neighbors(g, s.edge)
        for c in s.contexts:
            if c.nodes != nbrs:
                raise ContextKeysMismatch(
                    f"context {c.as_dict()} on edge {s.edge} must fix exactly nodes {sorted(nbrs)}"
                )
        if not nbrs:
            raise EmptyConditioningSet(f"edge {s.edge} has no common neighbours")


@dataclass(frozen=True)
class Restriction:
    """Linear constraint ``sum(phi[B] for B in terms) == 0`` (terms as bitmasks)."""

    terms: frozenset[int]

    def subsets(self) -> list[tuple[int, ...]]:
        return sorted((nodes_of(m) for m in self.terms), key=lambda s: (len(s), s))


@dataclass(frozen=True)
class RestrictionSet:
    d: int
    zeroed: frozenset[int]
    linear: tuple[Restriction, ...]


def cliquish_masks(g: UndirectedGraph) -> list[int]:
    """Bitmasks of every non-empty complete node subset, in increasing order."""
    return _cliquish_masks(g.node_count, tuple(g.sorted_edges()))


@lru_cache(maxsize=4096)
def _cliquish_masks(d: int, edges: tuple[Edge, ...]) -> list[int]:
    adj = [0] * d
    for a, b in edges:
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    out = []
    for m in range(1, 1 << d):
        ok = True
        rest = m
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            if (m & ~low) & ~adj[v]:
                ok = False
                break
            rest ^= low
        if ok:
            out.append(m)
    return out


def context_restriction(edge: Edge, context: Context) -> Restriction:
    pair = mask_of(edge)
    ones = list(context.ones)
    terms = frozenset(pair | mask_of(extra) for r in range(len(ones) + 1) for extra in combinations(ones, r))
    return Restriction(terms)


def derive_restrictions(sg: StratifiedGraph) -> RestrictionSet:
    validate(sg)
    d = sg.d
    cliquish = set(cliquish_masks(sg.graph))
    zeroed = frozenset(m for m in range(1, 1 << d) if m not in cliquish and bin(m).count("1") >= 2)
    linear = tuple(context_restriction(e, c) for e, c in sg.instances())
    return RestrictionSet(d, zeroed, linear)


def integer_rank(rows: list[list[int]]) -> int:
    """Exact rank of an integer matrix by fraction-free elimination."""
    rows = [r[:] for r in rows if any(r)]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                r = [p[col] * x - f * y for x, y in zip(rows[i], p)]
                g = 0
                for x in r:
                    g = gcd(g, x)
                rows[i] = [x // g for x in r] if g > 1 else r
        rank += 1
        if rank == len(rows):
            break
    return rank


def _constraint_rows(rs: RestrictionSet, coords: list[int]) -> list[list[int]]:
    col = {m: i for i, m in enumerate(coords)}
    rows = []
    for r in rs.linear:
        row = [0] * len(coords)
        for m in r.terms:
            if m in col:
                row[col[m]] = 1
        rows.append(row)
    return rows


def _surviving(rs: RestrictionSet) -> list[int]:
    return [m for m in range(1, 1 << rs.d) if m not in rs.zeroed]


def dimension(sg: StratifiedGraph) -> int:
    """Number of free log-linear parameters, excluding the normalising term."""
    return _dimension_cached(sg)


@lru_cache(maxsize=65536)
def _dimension_cached(sg):
    rs = derive_restrictions(sg)
    coords = _surviving(rs)
    return len(coords) - integer_rank(_constraint_rows(rs, coords))


def graph_dimension(g: UndirectedGraph) -> int:
    """Free parameters allowed by the graph alone: its non-empty cliquish subsets."""
    return len(cliquish_masks(g))


def forced_zero(rs: RestrictionSet) -> set[int]:
    """Masks A with ``phi[A] = 0`` in every solution of the restriction system."""
    coords = _surviving(rs)
    rows = _constraint_rows(rs, coords)
    base = integer_rank(rows)
    forced = set(rs.zeroed)
    for i, m in enumerate(coords):
        unit = [0] * len(coords)
        unit[i] = 1
        if integer_rank(rows + [unit]) == base:
            forced.add(m)
    return forced


def is_hierarchical(sg: StratifiedGraph) -> bool:
    rs = derive_restrictions(sg)
    forced = forced_zero(rs)
    full = (1 << rs.d) - 1
    for a in forced:
        rest = full & ~a
        sup = rest
        # walk every non-empty extra bit set to visit all supersets of a
        while sup:
            if (a | sup) not in forced:
                return False
            sup = (sup - 1) & rest
    return True
