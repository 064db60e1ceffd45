#!/usr/bin/env python3
"""Benchmark the compiled clustering kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [n_points] [gap_iterations]

Times the three kernel operations plus a full gap-statistic run at the
default analysis size, for each available backend, and reports the speedup.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from papertrail import kernels
from papertrail.clustering import cut_levels, gap_statistic, hierarchical_cluster
from papertrail.composition import distance_matrix


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 312
    gap_iters = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    rng = np.random.default_rng(42)
    centers = np.array([[0, 0, 0], [4, 0, 0], [0, 4, 0], [2, 2, 3]], dtype=float)
    points = np.vstack(
        [c + rng.normal(scale=0.6, size=(n // 4 + 1, 3)) for c in centers]
    )[:n]
    dmat, sq = distance_matrix(points)

    backends = {}
    for name in ("python", "compiled"):
        try:
            backends[name] = kernels.get_backend(name)
        except ImportError:
            print(f"note: {name} backend unavailable")

    tree = hierarchical_cluster(dmat, "ward")
    labels = cut_levels(tree, [4])[4]

    rows = []
    for name, backend in backends.items():
        link = _time(lambda: kernels.agglomerate(dmat, kernels.WARD, backend=backend))
        sil = _time(
            lambda: kernels.silhouette_samples(dmat, labels, 4, backend=backend)
        )
        wss = _time(lambda: kernels.pooled_within_ss(sq, labels, 4, backend=backend))
        gap = _time(
            lambda: gap_statistic(
                points, range(2, 16), b_iterations=gap_iters, seed=7, backend=backend
            ),
            repeats=1,
        )
        rows.append((name, link, sil, wss, gap))

    print(f"\nkernel timings (best of runs), n={n}, gap B={gap_iters}, k=2..15")
    print(f"{'backend':<10} {'linkage':>10} {'silhouette':>11} {'within-ss':>10} {'gap total':>10}")
    for name, link, sil, wss, gap in rows:
        print(f"{name:<10} {link*1e3:>9.1f}ms {sil*1e3:>10.2f}ms {wss*1e3:>9.2f}ms {gap:>9.2f}s")
    if len(rows) == 2:
        py, cx = rows[0], rows[1]
        print(
            f"\nspeedup (compiled over python): linkage x{py[1]/cx[1]:.1f}, "
            f"silhouette x{py[2]/cx[2]:.1f}, within-ss x{py[3]/cx[3]:.1f}, "
            f"gap x{py[4]/cx[4]:.1f}"
        )

    # The two paths must agree bit for bit on the dendrogram.
    if len(backends) == 2:
        a = kernels.agglomerate(dmat, kernels.WARD, backend=backends["python"])
        b = kernels.agglomerate(dmat, kernels.WARD, backend=backends["compiled"])
        assert np.array_equal(a, b), "backends disagree!"
        print("dendrogram parity: backends bit-identical")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
