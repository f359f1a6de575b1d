"""Rank statistics and partial correlation machinery.

The rank/correlation kernels are hot: the rater-agreement filter and the
evaluation tables issue tens of thousands of small calls at release
scale. A compiled Cython kernel is used when available and a numpy
fallback otherwise; selection happens once at import and is reported in
``BACKEND``. Setting ``COGSCORE_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import DegenerateDataError, SchemaError

if os.environ.get("COGSCORE_PURE_PYTHON"):
    from . import _rankcorr_py as _kernels

    BACKEND = "python"
else:
    try:
        from . import _rankcorr as _kernels  # compiled extension

        BACKEND = "cython"
    except ImportError:
        from . import _rankcorr_py as _kernels

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "CorrelationMatrix",
    "construct_partial_matrix",
    "partial_correlation",
    "pearson",
    "rank_transform",
    "spearman",
]

# Relative residual norm below which a regressand counts as an exact
# linear function of the controls.
_RESIDUAL_RTOL = 1e-10


def _as_series(x, name: str = "input") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise SchemaError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise SchemaError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise SchemaError(f"{name} contains NaN or Inf")
    return arr


def rank_transform(x: Sequence[float]) -> np.ndarray:
    """Average ranks of ``x`` (1-based); ties share the mean of their positions.

    The output always sums to n(n+1)/2.
    """
    return _kernels.rank(_as_series(x))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Standard product-moment correlation.

    Requires equal lengths >= 3 and nonzero variance on both sides.
    """
    ax = _as_series(x, "x")
    ay = _as_series(y, "y")
    if ax.size != ay.size:
        raise SchemaError(f"length mismatch: {ax.size} vs {ay.size}")
    if ax.size < 3:
        raise SchemaError(f"need at least 3 observations, got {ax.size}")
    r = _kernels.pearson(ax, ay)
    if np.isnan(r):
        raise DegenerateDataError("pearson undefined: an input has zero variance")
    return float(r)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson of the average-rank vectors.

    Tie-correct. Requires equal lengths >= 3 and at least two distinct
    values on each side.
    """
    ax = _as_series(x, "x")
    ay = _as_series(y, "y")
    if ax.size != ay.size:
        raise SchemaError(f"length mismatch: {ax.size} vs {ay.size}")
    if ax.size < 3:
        raise SchemaError(f"need at least 3 observations, got {ax.size}")
    r = _kernels.spearman(ax, ay)
    if np.isnan(r):
        raise DegenerateDataError("spearman undefined: an input is constant")
    return float(r)


def _residualize(y: np.ndarray, design: np.ndarray) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    res = y - design @ beta
    scale = float(np.linalg.norm(y - y.mean()))
    if float(np.linalg.norm(res)) <= _RESIDUAL_RTOL * max(scale, 1e-300):
        raise DegenerateDataError(
            "zero residual variance: series is an exact linear function of the controls"
        )
    return res


def partial_correlation(
    series: Mapping[str, Sequence[float]],
    a: str,
    b: str,
    controls: Iterable[str] = (),
) -> float:
    """Correlation between ``a`` and ``b`` after removing the controls.

    Both series are regressed (least squares, with intercept) on the
    control series; the result is the Pearson correlation of the two
    residual vectors. With no controls this reduces to plain Pearson.
    """
    control_names = [c for c in controls]
    for name in (a, b, *control_names):
        if name not in series:
            raise SchemaError(f"unknown series {name!r}")
    xa = _as_series(series[a], a)
    xb = _as_series(series[b], b)
    if not control_names:
        return pearson(xa, xb)

    cols = [_as_series(series[c], c) for c in control_names]
    n = xa.size
    lengths = {n, xb.size, *(c.size for c in cols)}
    if len(lengths) != 1:
        raise SchemaError(f"series length mismatch: {sorted(lengths)}")
    if n < len(control_names) + 3:
        raise SchemaError(
            f"need at least {len(control_names) + 3} observations for "
            f"{len(control_names)} controls, got {n}"
        )
    design = np.column_stack([np.ones(n), *cols])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateDataError("control design matrix is rank-deficient")
    return pearson(_residualize(xa, design), _residualize(xb, design))


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric construct-by-construct correlation matrix with unit diagonal."""

    names: tuple[str, ...]
    values: np.ndarray
    n: int  # records entering every cell (complete cases)

    def entry(self, a: str, b: str) -> float:
        return float(self.values[self.names.index(a), self.names.index(b)])


def construct_partial_matrix(
    columns: Mapping[str, Sequence[float | None]],
    on_ranks: bool = False,
) -> CorrelationMatrix:
    """Partial correlation between every two constructs, controlling the rest.

    ``columns`` maps construct name to per-record scores; records with a
    missing (None/NaN) value in any construct are excluded, so every cell
    is computed over the same complete-case set. With ``on_ranks`` the
    scores are rank-transformed first (Spearman-flavored variant).
    """
    names = tuple(columns)
    if len(names) < 2:
        raise SchemaError("need at least 2 constructs")
    raw = []
    for name in names:
        col = np.asarray(
            [np.nan if v is None else float(v) for v in columns[name]],
            dtype=np.float64,
        )
        raw.append(col)
    lengths = {c.size for c in raw}
    if len(lengths) != 1:
        raise SchemaError(f"construct column length mismatch: {sorted(lengths)}")
    complete = ~np.any(np.isnan(np.vstack(raw)), axis=0)
    kept = [c[complete] for c in raw]
    n = int(complete.sum())
    if n < len(names) + 3:
        raise SchemaError(f"only {n} complete records for {len(names)} constructs")
    if on_ranks:
        kept = [rank_transform(c) for c in kept]
    series = dict(zip(names, kept))

    values = np.eye(len(names))
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            b = names[j]
            rest = [c for c in names if c not in (a, b)]
            values[i, j] = values[j, i] = partial_correlation(series, a, b, rest)
    return CorrelationMatrix(names=names, values=values, n=n)
