"""Non-reversible Metropolis-Hastings search over stratified graphs.

Two chains are provided.  :func:`strata_search` explores sets of strata for
a fixed chordal graph by adding or removing one context at a time;
:func:`full_search` walks over chordal graphs by toggling single edges and
pairs every graph with the best strata an inner strata search finds for it.
Candidates are accepted with probability ``min(1, exp(total* - total))``,
where ``total`` is BIC plus log prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from .errors import NoStrataPossible
from .graph import UndirectedGraph, is_chordal
from .model import Instance, StratifiedGraph, all_instances
from .scoring import Dataset, ModelScore, ScoreCache


@dataclass(frozen=True)
class SearchState:
    model: StratifiedGraph
    score: ModelScore


@dataclass
class SearchTrace:
    visited: dict[tuple, SearchState]
    best: SearchState
    iterations: int
    seed: int
    records: list[dict] = field(default_factory=list)

    def top(self, k: int = 5) -> list[SearchState]:
        return sorted(self.visited.values(), key=lambda s: -s.score.total)[:k]

    def _visit(self, state: SearchState) -> None:
        self.visited[state.model.key()] = state
        if state.score.total > self.best.score.total:
            self.best = state


def _accept(rng: np.random.Generator, current: float, candidate: float) -> bool:
    delta = candidate - current
    if delta >= 0:
        return True
    return bool(rng.random() < math.exp(delta))


def _as_cache(data: Dataset | ScoreCache, **kwargs) -> ScoreCache:
    return data if isinstance(data, ScoreCache) else ScoreCache(data, **kwargs)


def _record(t: int, model: StratifiedGraph, accepted: bool, total: float) -> dict:
    return {
        "iter": t,
        "proposed": {
            "edges": [[a + 1, b + 1] for a, b in model.graph.sorted_edges()],
            "instances": [
                [[a + 1, b + 1], {str(k + 1): v for k, v in c.items}] for (a, b), c in model.instances()
            ],
        },
        "accepted": accepted,
        "total_score": total,
    }


def propose_strata(
    current: frozenset, available: list[Instance], rng: np.random.Generator
) -> frozenset:
    """Add or remove exactly one context instance.

    ``available`` is the full list of addable instances for the graph; it
    must be in a fixed order so seeded runs are reproducible.
    """
    if not available:
        raise NoStrataPossible("the graph has no edge with common neighbours")
    if not current:
        return frozenset([available[rng.integers(len(available))]])
    present = sorted(current, key=_instance_key)
    absent = [inst for inst in available if inst not in current]
    if not absent or rng.random() >= 0.5:
        return current - {present[rng.integers(len(present))]}
    return current | {absent[rng.integers(len(absent))]}


def _instance_key(inst: Instance):
    edge, ctx = inst
    return (edge, ctx.items)


def strata_search(
    graph: UndirectedGraph,
    data: Dataset | ScoreCache,
    iters: int,
    seed: int,
    start: Iterable[Instance] = (),
    record: bool = True,
) -> SearchTrace:
    """Metropolis-Hastings over strata sets for a fixed chordal graph."""
    if not is_chordal(graph):
        raise ValueError("strata search needs a chordal graph")
    cache = _as_cache(data)
    rng = np.random.default_rng(seed)
    available = all_instances(graph)
    current = frozenset(start)
    model = StratifiedGraph.from_instances(graph, current)
    state = SearchState(model, cache.score(model))
    trace = SearchTrace({model.key(): state}, state, 0, seed)
    if not available:
        return trace
    for t in range(1, iters + 1):
        cand = propose_strata(current, available, rng)
        cand_model = StratifiedGraph.from_instances(graph, cand)
        cand_state = SearchState(cand_model, cache.score(cand_model))
        trace._visit(cand_state)
        accepted = _accept(rng, state.score.total, cand_state.score.total)
        if accepted:
            current, state = cand, cand_state
        if record:
            trace.records.append(_record(t, cand_model, accepted, cand_state.score.total))
        trace.iterations = t
    return trace


def exhaustive_strata(
    graph: UndirectedGraph, data: Dataset | ScoreCache, max_instances: int = 20
) -> SearchTrace:
    """Score every strata set of ``graph``; only for small instance counts."""
    cache = _as_cache(data)
    available = all_instances(graph)
    if len(available) > max_instances:
        raise ValueError(f"{len(available)} instances exceed the enumeration limit {max_instances}")
    empty = StratifiedGraph(graph)
    first = SearchState(empty, cache.score(empty))
    trace = SearchTrace({empty.key(): first}, first, 0, seed=0)
    for r in range(1, len(available) + 1):
        for subset in combinations(available, r):
            model = StratifiedGraph.from_instances(graph, subset)
            trace._visit(SearchState(model, cache.score(model)))
            trace.iterations += 1
    return trace


def _node_pairs(d: int) -> list[tuple[int, int]]:
    return list(combinations(range(d), 2))


def propose_graph(current: UndirectedGraph, rng: np.random.Generator) -> UndirectedGraph:
    """Toggle one uniformly chosen node pair, redrawing until the result is chordal."""
    pairs = _node_pairs(current.node_count)
    if not pairs:
        raise ValueError("a single-node graph has no neighbouring graphs")
    while True:
        a, b = pairs[rng.integers(len(pairs))]
        candidate = current.toggle_edge(a, b)
        if is_chordal(candidate):
            return candidate


def full_search(
    data: Dataset | ScoreCache,
    outer_iters: int,
    inner_iters: int | None = None,
    seed: int = 0,
    revisit_iters: int = 0,
    record: bool = True,
    **cache_kwargs,
) -> SearchTrace:
    """Search chordal graphs, each paired with the best strata found for it.

    ``inner_iters`` defaults to ``200 * |E|`` per graph.  Inner results are
    cached per graph; with ``revisit_iters > 0`` a revisited graph resumes
    its strata search from the cached best strata for that many extra steps.
    """
    cache = _as_cache(data, **cache_kwargs)
    rng = np.random.default_rng(seed)
    d = cache.data.d
    best_for: dict[tuple, SearchState] = {}

    def optimise(graph: UndirectedGraph) -> SearchState:
        key = tuple(graph.sorted_edges())
        known = best_for.get(key)
        if known is not None and revisit_iters <= 0:
            return known
        inner_seed = int(rng.integers(2**63))
        if known is None:
            budget = 200 * len(graph.edges) if inner_iters is None else inner_iters
            start = ()
        else:
            budget = revisit_iters
            start = known.model.instances()
        inner = strata_search(graph, cache, budget, inner_seed, start=start, record=False)
        if known is None or inner.best.score.total > known.score.total:
            known = inner.best
        best_for[key] = known
        return known

    state = optimise(UndirectedGraph.empty(d))
    trace = SearchTrace({state.model.key(): state}, state, 0, seed)
    if d < 2:
        return trace
    for t in range(1, outer_iters + 1):
        cand_graph = propose_graph(state.model.graph, rng)
        cand = optimise(cand_graph)
        trace._visit(cand)
        accepted = _accept(rng, state.score.total, cand.score.total)
        if accepted:
            state = cand
        if record:
            trace.records.append(_record(t, cand.model, accepted, cand.score.total))
        trace.iterations = t
    return trace


def posterior_estimate(trace: SearchTrace) -> dict[tuple, float]:
    """Renormalised ``score * prior`` over the distinct visited states."""
    if not trace.visited:
        raise ValueError("empty trace")
    keys = list(trace.visited)
    totals = np.array([trace.visited[k].score.total for k in keys])
    w = np.exp(totals - totals.max())
    w /= w.sum()
    return dict(zip(keys, w.tolist()))
