"""BIC scoring of stratified graphs and the graph-density prior."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .distribution import JointTable
from .errors import ZeroCell
from .estimation import DEFAULT_EPS, DEFAULT_MAX_CYCLES, cyclical_mle
from .model import StratifiedGraph, dimension, graph_dimension, validate


@dataclass(frozen=True, eq=False)
class Dataset:
    """Binary observations plus their cached cell counts."""

    d: int
    counts: np.ndarray
    names: tuple[str, ...] = ()
    rows: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (1 << self.d,):
            raise ValueError(f"expected {1 << self.d} cell counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"X{i + 1}" for i in range(self.d)))

    @classmethod
    def from_rows(cls, rows, names=()) -> "Dataset":
        rows = np.asarray(rows, dtype=np.uint8)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-D array")
        d = rows.shape[1]
        if np.any(rows > 1):
            raise ValueError("rows must contain only 0 and 1")
        cells = (rows.astype(np.int64) << np.arange(d)).sum(axis=1)
        counts = np.bincount(cells, minlength=1 << d).astype(float)
        return cls(d, counts, tuple(names), rows)

    @property
    def n(self) -> int:
        return int(round(self.counts.sum()))

    def empirical(self, smoothing: float = 0.0) -> JointTable:
        return JointTable.from_counts(self.d, self.counts, smoothing)


@dataclass(frozen=True)
class ModelScore:
    loglik: float
    dim: int
    bic: float
    log_prior: float
    total: float

    def as_dict(self) -> dict:
        return {
            "loglik": self.loglik,
            "dim": self.dim,
            "bic": self.bic,
            "log_prior": self.log_prior,
            "total": self.total,
        }


def log_likelihood(data: Dataset, t: JointTable) -> float:
    observed = data.counts > 0
    probs = t.probs / t.total
    if np.any(probs[observed] <= 0):
        raise ZeroCell("fitted table gives zero probability to an observed cell")
    return float(np.sum(data.counts[observed] * np.log(probs[observed])))


def graph_prior(sg: StratifiedGraph, variant: str = "graph") -> float:
    """Unnormalised log prior ``-|Theta| log 2``.

    ``variant="graph"`` counts parameters of the underlying graph only;
    ``"strata"`` uses the strata-adjusted dimension instead.
    """
    if variant == "graph":
        k = graph_dimension(sg.graph)
    elif variant == "strata":
        k = dimension(sg)
    else:
        raise ValueError(f"unknown prior variant {variant!r}")
    return -k * math.log(2.0)


def bic_score(
    data: Dataset,
    sg: StratifiedGraph,
    eps: float = DEFAULT_EPS,
    max_cycles: int = DEFAULT_MAX_CYCLES,
    prior: str = "graph",
    smoothing: float = 0.0,
) -> ModelScore:
    validate(sg)
    if data.n == 0:
        raise ValueError("cannot score an empty dataset")
    fitted, _ = cyclical_mle(data.empirical(smoothing), sg, eps, max_cycles, record_kl=False)
    loglik = log_likelihood(data, fitted)
    dim = dimension(sg)
    bic = loglik - 0.5 * dim * math.log(data.n)
    log_prior = graph_prior(sg, prior)
    return ModelScore(loglik, dim, bic, log_prior, bic + log_prior)


class ScoreCache:
    """Scores keyed by canonical model, shared across searches on one dataset."""

    def __init__(self, data: Dataset, eps: float = DEFAULT_EPS, max_cycles: int = DEFAULT_MAX_CYCLES,
                 prior: str = "graph", smoothing: float = 0.0):
        self.data = data
        self.eps = eps
        self.max_cycles = max_cycles
        self.prior = prior
        self.smoothing = smoothing
        self._scores: dict[tuple, ModelScore] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._scores)

    def score(self, sg: StratifiedGraph) -> ModelScore:
        key = sg.key()
        with self._lock:
            hit = self._scores.get(key)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        result = bic_score(self.data, sg, self.eps, self.max_cycles, self.prior, self.smoothing)
        with self._lock:
            self._scores[key] = result
        return result
