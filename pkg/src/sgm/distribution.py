"""Dense joint distributions over binary variables.

Cell ``x`` of a table over ``d`` variables lives at index
``sum(x[i] << i)``: bit ``i`` holds the value of variable ``i`` ("lsb=var1"
in the 1-based labels used by the file formats).  A cell index therefore
doubles as the bitmask of the variables set to one, which is how the
log-linear parameters are indexed as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import SupportMismatch, ZeroCell

MAX_VARIABLES = 20


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def nodes_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def as_tensor(values: np.ndarray, d: int) -> np.ndarray:
    """View a length ``2**d`` vector as a ``(2,)*d`` array with axis i = variable i."""
    return values.reshape((2,) * d, order="F") if d else values.reshape(())


def from_tensor(tensor: np.ndarray) -> np.ndarray:
    return tensor.ravel(order="F")


def _check_d(d: int) -> None:
    if d < 0 or d > MAX_VARIABLES:
        raise ValueError(f"d={d} outside the supported range 0..{MAX_VARIABLES}")


@dataclass(frozen=True, eq=False)
class JointTable:
    """A probability (or frequency) vector over all ``2**d`` outcomes."""

    d: int
    probs: np.ndarray

    def __post_init__(self):
        _check_d(self.d)
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (1 << self.d,):
            raise ValueError(f"expected {1 << self.d} cells, got shape {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("table entries must be finite and non-negative")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, d: int) -> "JointTable":
        return cls(d, np.full(1 << d, 1.0 / (1 << d)))

    @classmethod
    def from_counts(cls, d: int, counts, smoothing: float = 0.0) -> "JointTable":
        counts = np.asarray(counts, dtype=float) + smoothing
        total = counts.sum()
        if total <= 0:
            raise ValueError("cannot normalise an empty table")
        return cls(d, counts / total)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.total - 1.0) <= tol

    def is_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    def tensor(self) -> np.ndarray:
        return as_tensor(self.probs, self.d)

    def __getitem__(self, x) -> float:
        """Probability of the outcome given as a sequence of 0/1 values."""
        return float(self.probs[mask_of(i for i, v in enumerate(x) if v)])

    def allclose(self, other: "JointTable", atol: float = 1e-12) -> bool:
        return self.d == other.d and np.allclose(self.probs, other.probs, rtol=0, atol=atol)


@dataclass(frozen=True, eq=False)
class LogLinearParams:
    """Log-linear parameters ``phi[A]`` indexed by the bitmask of ``A``."""

    d: int
    phi: np.ndarray

    def __post_init__(self):
        _check_d(self.d)
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (1 << self.d,):
            raise ValueError(f"expected {1 << self.d} parameters, got shape {phi.shape}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_dict(cls, d: int, values: dict) -> "LogLinearParams":
        phi = np.zeros(1 << d)
        for subset, value in values.items():
            phi[mask_of(subset)] = value
        return cls(d, phi)

    def __getitem__(self, subset: Iterable[int]) -> float:
        return float(self.phi[mask_of(subset)])

    def as_dict(self, tol: float = 0.0) -> dict[tuple[int, ...], float]:
        return {nodes_of(m): float(v) for m, v in enumerate(self.phi) if abs(v) > tol or m == 0}


def _mobius(values: np.ndarray, d: int, sign: float) -> np.ndarray:
    """In-place subset-lattice transform: sign=+1 is zeta (sum over subsets),
    sign=-1 is its inverse."""
    t = as_tensor(values, d)
    for axis in range(d):
        lo = np.take(t, 0, axis=axis)
        hi = np.take(t, 1, axis=axis)
        idx = [slice(None)] * d
        idx[axis] = 1
        t[tuple(idx)] = hi + sign * lo
    return values


def theta_to_phi(t: JointTable) -> LogLinearParams:
    if not t.is_positive():
        raise ZeroCell("log-linear parameters need a strictly positive table")
    logp = np.log(t.probs / t.total)
    return LogLinearParams(t.d, _mobius(logp.copy(), t.d, -1.0))


def phi_to_theta(p: LogLinearParams) -> JointTable:
    """Table with ``log P(x) = sum of phi[A] over A within x``, renormalised.

    ``phi[()]`` is ignored and implicitly replaced by minus the log
    normalising constant.
    """
    logits = p.phi.copy()
    logits[0] = 0.0
    logits = _mobius(logits, p.d, 1.0)
    logits -= logits.max()
    probs = np.exp(logits)
    return JointTable(p.d, probs / probs.sum())


def kl_divergence(p: JointTable, q: JointTable) -> float:
    """``sum_x p(x) log(p(x)/q(x))``; cells with ``p(x) = 0`` contribute zero."""
    if p.d != q.d:
        raise ValueError("tables over different variable counts")
    support = p.probs > 0
    if np.any(q.probs[support] <= 0):
        raise SupportMismatch("q vanishes where p is positive")
    pp = p.probs[support]
    return max(float(np.sum(pp * (np.log(pp) - np.log(q.probs[support])))), 0.0)


def marginal(t: JointTable, nodes: Iterable[int]) -> JointTable:
    """Marginal over ``nodes``; the result's variable k is the k-th smallest node."""
    keep = sorted(set(nodes))
    if any(v < 0 or v >= t.d for v in keep):
        raise ValueError(f"nodes {keep} outside 0..{t.d - 1}")
    drop = tuple(i for i in range(t.d) if i not in keep)
    m = t.tensor().sum(axis=drop) if drop else t.tensor()
    return JointTable(len(keep), from_tensor(np.asarray(m)).copy())


def conditional_odds_ratio(t: JointTable, a: int, b: int, given: dict[int, int]) -> float:
    """Odds ratio of ``(X_a, X_b)`` inside the slice fixed by ``given``,
    marginalising every other variable."""
    nodes = sorted({a, b, *given})
    m = marginal(t, nodes).tensor()
    idx = tuple(given[v] if v in given else slice(None) for v in nodes)
    block = m[idx]
    return float(block[0, 0] * block[1, 1] / (block[0, 1] * block[1, 0]))


def sample(t: JointTable, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. rows drawn from ``t`` as an ``(n, d)`` uint8 array."""
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.zeros((0, t.d), dtype=np.uint8)
    probs = t.probs / t.total
    cells = rng.choice(probs.size, size=n, p=probs)
    return ((cells[:, None] >> np.arange(t.d)) & 1).astype(np.uint8)
