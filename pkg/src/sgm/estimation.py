"""Maximum likelihood estimation for stratified graphical models.

The estimator alternates two closed-form ML projections:

* onto a chordal graph, ``P(x) = prod_C P(x_C) / prod_S P(x_S)`` over the
  cliques and separators of a junction tree, and
* onto one context-specific independence ``X_a _|_ X_b | X_L = x_L``, which
  replaces each 2x2 block of the table inside the context by the product of
  its row and column margins.

Cycling through every context and then the graph projection converges to the
joint MLE under all restrictions of the stratified graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .distribution import JointTable, as_tensor, from_tensor, kl_divergence, theta_to_phi
from .errors import EmptyBlock, NotConverged, ZeroCell
from .graph import Edge, UndirectedGraph, junction_tree
from .model import Context, RestrictionSet, StratifiedGraph, derive_restrictions, validate

DEFAULT_EPS = 1e-9
DEFAULT_MAX_CYCLES = 100_000


@dataclass
class ConvergenceReport:
    cycles: int = 0
    final_change: float = float("inf")
    kl_history: list[float] = field(default_factory=list)
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "final_change": self.final_change,
            "converged": self.converged,
            "kl_history_length": len(self.kl_history),
        }


def _graph_projector(g: UndirectedGraph) -> Callable[[np.ndarray], np.ndarray]:
    jt = junction_tree(g)
    d = g.node_count
    clique_axes = [tuple(i for i in range(d) if i not in c) for c in jt.cliques]
    sep_axes = [tuple(i for i in range(d) if i not in s) for s in jt.separators]
    if len(jt.cliques) == 1 and len(jt.cliques[0]) == d:
        return lambda probs: probs.copy()

    def project(probs: np.ndarray) -> np.ndarray:
        t = as_tensor(probs, d)
        num = np.ones_like(t)
        for axes in clique_axes:
            num = num * t.sum(axis=axes, keepdims=True)
        den = np.ones_like(t)
        for axes in sep_axes:
            den = den * t.sum(axis=axes, keepdims=True)
        if np.any((den <= 0) & (num > 0)):
            raise ZeroCell("separator marginal vanishes where a clique marginal does not")
        out = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return from_tensor(out).copy()

    return project


def _context_projector(d: int, edge: Edge, context: Context, on_empty: str = "keep"):
    a, b = edge
    fixed = context.as_dict()
    if a in fixed or b in fixed:
        raise ValueError("context may not fix the edge's own endpoints")
    idx = tuple(fixed[i] if i in fixed else slice(None) for i in range(d))
    free = [i for i in range(d) if i not in fixed]
    pa, pb = free.index(a), free.index(b)

    def project(probs: np.ndarray) -> np.ndarray:
        out = probs.copy()
        block = np.moveaxis(as_tensor(out, d)[idx], (pa, pb), (0, 1))
        rows = block.sum(axis=1, keepdims=True)
        cols = block.sum(axis=0, keepdims=True)
        mass = rows.sum(axis=0, keepdims=True)
        if on_empty == "raise" and np.any(mass <= 0):
            raise EmptyBlock(f"a slice of context {fixed} on edge {edge} has zero mass")
        # writes go through the view into ``out``; zero-mass slices stay as they are
        np.divide(rows * cols, mass, out=block, where=mass > 0)
        return out

    return project


def project_graph(p: JointTable, g: UndirectedGraph) -> JointTable:
    """ML projection of ``p`` onto distributions Markov to the chordal graph ``g``."""
    if g.node_count != p.d:
        raise ValueError("graph and table disagree on the number of variables")
    return JointTable(p.d, _graph_projector(g)(p.probs))


def project_context(p: JointTable, edge: Edge, context: Context, on_empty: str = "keep") -> JointTable:
    """ML projection imposing ``X_a _|_ X_b`` inside ``context``.

    Every slice of the remaining variables is handled independently; slices
    with zero mass are left unchanged unless ``on_empty="raise"``.
    """
    return JointTable(p.d, _context_projector(p.d, edge, context, on_empty)(p.probs))


def projection_schedule(sg: StratifiedGraph) -> list[Callable[[np.ndarray], np.ndarray]]:
    """One cycle of projections: every context in order, then the graph."""
    steps = [_context_projector(sg.d, e, c) for e, c in sg.instances()]
    steps.append(_graph_projector(sg.graph))
    return steps


class CompiledSchedule:
    """Index arrays driving :func:`sgm._kernels.run_cycle` for one model."""

    def __init__(self, sg: StratifiedGraph):
        d = sg.d
        quads = [_kernels.context_quads(d, e, c.items) for e, c in sg.instances()]
        self.steps = len(quads) + 1
        self.quad_ptr = np.cumsum([0] + [len(q) for q in quads]).astype(np.int64)
        self.quads = np.concatenate(quads) if quads else np.zeros((0, 4), dtype=np.int64)
        jt = junction_tree(sg.graph)
        self.skip_graph = len(jt.cliques) == 1 and len(jt.cliques[0]) == d
        self.cmaps = np.array([_kernels.subset_map(c, d) for c in jt.cliques], dtype=np.int64)
        self.csizes = np.array([1 << len(c) for c in jt.cliques], dtype=np.int64)
        smaps = [_kernels.subset_map(s, d) for s in jt.separators]
        self.smaps = np.array(smaps, dtype=np.int64).reshape(len(smaps), 1 << d)
        self.ssizes = np.array([1 << len(s) for s in jt.separators], dtype=np.int64)
        self._kl = np.zeros(self.steps)

    def cycle(self, probs: np.ndarray, want_kl: bool = False) -> tuple[float, np.ndarray | None]:
        change, status = _kernels.run_cycle(
            probs, self.quads, self.quad_ptr, self.cmaps, self.csizes,
            self.smaps, self.ssizes, self.skip_graph, self._kl, want_kl,
        )
        if status:
            raise ZeroCell("separator marginal vanishes where a clique marginal does not")
        return change, (self._kl.copy() if want_kl else None)


def cyclical_mle(
    p0: JointTable,
    sg: StratifiedGraph,
    eps: float = DEFAULT_EPS,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    record_kl: bool = True,
    engine: str = "compiled",
) -> tuple[JointTable, ConvergenceReport]:
    """Fit ``sg`` to the observed distribution ``p0`` by cyclical projection.

    Stops after the first full cycle whose summed L1 change in the table is
    below ``eps``.  Raises :class:`NotConverged` (carrying the partial fit)
    if that never happens within ``max_cycles``.  ``engine="numpy"`` runs the
    same schedule through :func:`project_context` and :func:`project_graph`.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    validate(sg)
    if sg.d != p0.d:
        raise ValueError("model and table disagree on the number of variables")
    report = ConvergenceReport()
    cur = p0.probs.copy()
    if engine == "compiled":
        schedule = CompiledSchedule(sg)

        def one_cycle(probs):
            change, kl = schedule.cycle(probs, record_kl)
            if record_kl:
                report.kl_history.extend(kl.tolist())
            return probs, change
    elif engine == "numpy":
        steps = projection_schedule(sg)

        def one_cycle(probs):
            change = 0.0
            for step in steps:
                new = step(probs)
                change += float(np.abs(new - probs).sum())
                if record_kl:
                    report.kl_history.append(kl_divergence(JointTable(p0.d, probs), JointTable(p0.d, new)))
                probs = new
            return probs, change
    else:
        raise ValueError(f"unknown engine {engine!r}")
    while report.cycles < max_cycles:
        cur, change = one_cycle(cur)
        report.cycles += 1
        report.final_change = change
        if change < eps:
            report.converged = True
            return JointTable(p0.d, cur), report
    raise NotConverged(JointTable(p0.d, cur), report)


@dataclass
class RestrictionReport:
    max_zeroed: float
    max_linear: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_zeroed < self.tol and self.max_linear < self.tol

    def as_dict(self) -> dict:
        return {
            "max_zeroed": self.max_zeroed,
            "max_linear": self.max_linear,
            "tol": self.tol,
            "passed": self.passed,
        }


def check_restrictions(t: JointTable, rs: RestrictionSet | StratifiedGraph, tol: float = 1e-6) -> RestrictionReport:
    """Largest violations of the log-linear restrictions by table ``t``."""
    if isinstance(rs, StratifiedGraph):
        rs = derive_restrictions(rs)
    phi = theta_to_phi(t).phi
    zeroed = max((abs(phi[m]) for m in rs.zeroed), default=0.0)
    linear = max((abs(sum(phi[m] for m in r.terms)) for r in rs.linear), default=0.0)
    return RestrictionReport(float(zeroed), float(linear), tol)
