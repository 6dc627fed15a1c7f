"""Compiled inner loop of the cyclical projection.

A schedule is flattened into index arrays once, so that one full cycle
(every context projection followed by the graph projection) runs without
returning to Python.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def run_cycle(probs, quads, quad_ptr, cmaps, csizes, smaps, ssizes, skip_graph, kl_out, want_kl):
    """Apply one cycle in place.

    Returns ``(l1_change, status)``; status 1 flags a separator marginal that
    vanishes under a positive clique marginal.  When ``want_kl`` is set,
    ``kl_out[i]`` receives the KL divergence from the table before step i to
    the table after it.
    """
    change = 0.0
    m = quad_ptr.shape[0] - 1
    for k in range(m):
        kl = 0.0
        for r in range(quad_ptr[k], quad_ptr[k + 1]):
            i00 = quads[r, 0]
            i01 = quads[r, 1]
            i10 = quads[r, 2]
            i11 = quads[r, 3]
            t00 = probs[i00]
            t01 = probs[i01]
            t10 = probs[i10]
            t11 = probs[i11]
            s = t00 + t01 + t10 + t11
            if s <= 0.0:
                continue
            r0 = t00 + t01
            r1 = t10 + t11
            c0 = t00 + t10
            c1 = t01 + t11
            n00 = r0 * c0 / s
            n01 = r0 * c1 / s
            n10 = r1 * c0 / s
            n11 = r1 * c1 / s
            change += abs(n00 - t00) + abs(n01 - t01) + abs(n10 - t10) + abs(n11 - t11)
            if want_kl:
                if t00 > 0.0:
                    kl += t00 * np.log(t00 / n00)
                if t01 > 0.0:
                    kl += t01 * np.log(t01 / n01)
                if t10 > 0.0:
                    kl += t10 * np.log(t10 / n10)
                if t11 > 0.0:
                    kl += t11 * np.log(t11 / n11)
            probs[i00] = n00
            probs[i01] = n01
            probs[i10] = n10
            probs[i11] = n11
        if want_kl:
            kl_out[k] = max(kl, 0.0)
    if skip_graph:
        if want_kl:
            kl_out[m] = 0.0
        return change, 0
    ncells = probs.shape[0]
    maxsize = 1
    for j in range(csizes.shape[0]):
        if csizes[j] > maxsize:
            maxsize = csizes[j]
    marg = np.zeros(maxsize)
    num = np.ones(ncells)
    den = np.ones(ncells)
    for j in range(cmaps.shape[0]):
        marg[: csizes[j]] = 0.0
        for x in range(ncells):
            marg[cmaps[j, x]] += probs[x]
        for x in range(ncells):
            num[x] *= marg[cmaps[j, x]]
    for j in range(smaps.shape[0]):
        marg[: ssizes[j]] = 0.0
        for x in range(ncells):
            marg[smaps[j, x]] += probs[x]
        for x in range(ncells):
            den[x] *= marg[smaps[j, x]]
    kl = 0.0
    status = 0
    for x in range(ncells):
        if den[x] > 0.0:
            new = num[x] / den[x]
        else:
            if num[x] > 0.0:
                status = 1
            new = 0.0
        old = probs[x]
        change += abs(new - old)
        if want_kl and old > 0.0:
            kl += old * np.log(old / new)
        probs[x] = new
    if want_kl:
        kl_out[m] = max(kl, 0.0)
    return change, status


def subset_map(nodes, d):
    """Index of every cell's restriction to ``nodes`` (bits ordered by node)."""
    cells = np.arange(1 << d, dtype=np.int64)
    out = np.zeros(1 << d, dtype=np.int64)
    for k, v in enumerate(sorted(nodes)):
        out |= ((cells >> v) & 1) << k
    return out


def context_quads(d, edge, context_items):
    """Rows of (00, 01, 10, 11) cell indices, one row per slice of the free variables."""
    a, b = edge
    fixed = {v for v, _ in context_items}
    base = 0
    for v, val in context_items:
        if val:
            base |= 1 << v
    free = [i for i in range(d) if i not in fixed and i != a and i != b]
    slices = np.zeros(1 << len(free), dtype=np.int64)
    idx = np.arange(1 << len(free), dtype=np.int64)
    for k, v in enumerate(free):
        slices |= ((idx >> k) & 1) << v
    slices |= base
    return np.stack([slices, slices | (1 << b), slices | (1 << a), slices | (1 << a) | (1 << b)], axis=1)
