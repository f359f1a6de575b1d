"""Pure-Python (numpy) rank and correlation kernels.

Fallback used when the compiled extension is unavailable. The public
API in :mod:`cogscore.stats` validates inputs; kernels assume clean,
contiguous float64 arrays.
"""

from __future__ import annotations

import numpy as np


def rank(x: np.ndarray) -> np.ndarray:
    """Average (fractional) ranks of ``x``, 1-based; ties share the mean rank."""
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    boundary = np.empty(n, dtype=bool)
    boundary[0] = True
    np.not_equal(xs[1:], xs[:-1], out=boundary[1:])
    run_id = np.cumsum(boundary) - 1
    counts = np.bincount(run_id)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    # Mean of positional ranks start+1 .. start+count.
    avg = starts + 0.5 * (counts - 1) + 1.0
    out = np.empty(n, dtype=np.float64)
    out[order] = avg[run_id]
    return out


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation via centered two-pass sums.

    Returns NaN when either variance is zero; the caller decides how to
    report that.
    """
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx <= 0.0 or syy <= 0.0:
        return float("nan")
    return float(np.dot(dx, dy) / np.sqrt(sxx * syy))


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of the two rank vectors (tie-correct)."""
    return pearson(rank(x), rank(y))
