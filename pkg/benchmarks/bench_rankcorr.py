"""Benchmark the compiled rank/correlation kernels against the numpy fallback.

Two workload shapes matter in practice: many tiny vectors (the per-image
rater-agreement filter at release scale) and a few long vectors (the
evaluation table columns).

Run: python3 benchmarks/bench_rankcorr.py
"""

import time

import numpy as np

import cogscore.stats._rankcorr_py as kernels_py

try:
    import cogscore.stats._rankcorr as kernels_cy
except ImportError:
    kernels_cy = None


def bench(kernels, pairs, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for x, y in pairs:
            kernels.spearman(x, y)
        best = min(best, time.perf_counter() - start)
    return best


def workload_small(rng, count=20_000, length=12):
    return [
        (
            np.ascontiguousarray(rng.integers(0, 5, size=length).astype(float)),
            np.ascontiguousarray(rng.integers(0, 5, size=length).astype(float)),
        )
        for _ in range(count)
    ]


def workload_large(rng, count=20, length=50_000):
    return [
        (rng.normal(size=length), rng.normal(size=length)) for _ in range(count)
    ]


def main():
    rng = np.random.default_rng(7)
    workloads = [
        ("20k spearman calls, n=12 (agreement filter shape)", workload_small(rng)),
        ("20 spearman calls, n=50k (table column shape)", workload_large(rng)),
    ]
    print(f"{'workload':55s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, pairs in workloads:
        t_py = bench(kernels_py, pairs)
        if kernels_cy is None:
            print(f"{name:55s} {t_py:9.3f}s {'n/a':>10s} {'n/a':>8s}")
            continue
        t_cy = bench(kernels_cy, pairs)
        # both backends agree before we compare their speed
        for x, y in pairs[:5]:
            assert abs(kernels_cy.spearman(x, y) - kernels_py.spearman(x, y)) < 1e-12
        print(f"{name:55s} {t_py:9.3f}s {t_cy:9.3f}s {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
