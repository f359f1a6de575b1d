# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank and correlation kernels.

Same contract as ``_rankcorr_py``: clean contiguous float64 arrays in,
NaN out for zero-variance correlations. Accumulation uses long double
so results track the pairwise-summing numpy fallback well below 1e-12.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def rank(cnp.ndarray[cnp.float64_t, ndim=1] x):
    """Average (fractional) ranks of ``x``, 1-based; ties share the mean rank."""
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1] order = np.argsort(x, kind="stable")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i = 0, j, k
    cdef double avg
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            out[order[k]] = avg
        i = j + 1
    return out


def pearson(cnp.ndarray[cnp.float64_t, ndim=1] x,
            cnp.ndarray[cnp.float64_t, ndim=1] y):
    """Product-moment correlation; NaN when either variance is zero."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef long double mx = 0.0, my = 0.0
    for i in range(n):
        mx += x[i]
        my += y[i]
    mx /= n
    my /= n
    cdef long double sxx = 0.0, syy = 0.0, sxy = 0.0, dx, dy
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    if sxx <= 0.0 or syy <= 0.0:
        return float("nan")
    return float(sxy / sqrt(<double> (sxx * syy)))


def spearman(cnp.ndarray[cnp.float64_t, ndim=1] x,
             cnp.ndarray[cnp.float64_t, ndim=1] y):
    """Pearson correlation of the two rank vectors (tie-correct)."""
    return pearson(rank(x), rank(y))
