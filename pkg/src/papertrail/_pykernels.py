"""Pure-numpy fallback for the clustering inner loops.

Mirrors ``_ckernels.pyx`` operation for operation; the Lance-Williams
update is written with the same association order so both backends produce
bit-identical dendrograms (the extension is compiled with FP contraction
off for the same reason).
"""

from __future__ import annotations

import numpy as np

WARD, COMPLETE, AVERAGE = 0, 1, 2

BACKEND_NAME = "python"


def agglomerate(work: np.ndarray, method: int) -> np.ndarray:
    """Agglomerate a working distance matrix into a merge table.

    ``work`` is an (n, n) float64 matrix, pre-squared for Ward, diagonal
    already +inf; it is consumed (mutated).  Returns an (n-1, 4) array with
    rows (node_a, node_b, height, size): leaves are nodes 0..n-1, the merge
    at row i creates node n+i, and node_a < node_b.

    Equal-distance merge candidates are broken by the lexicographically
    smallest (smallest leaf, largest leaf) over the union of the two
    clusters, which picks a unique pair.

    Per-row minima are cached so a step costs O(n) plus occasional row
    rescans; the cache holds exact values, so selection (and therefore the
    dendrogram) is identical to a full-matrix scan.
    """
    n = work.shape[0]
    size = np.ones(n)
    min_leaf = np.arange(n)
    max_leaf = np.arange(n)
    node_id = np.arange(n)
    out = np.empty((n - 1, 4))
    ward = method == WARD

    active = np.ones(n, dtype=bool)
    row_min = work.min(axis=1)
    row_arg = work.argmin(axis=1)

    for step in range(n - 1):
        masked = np.where(active, row_min, np.inf)
        best = masked.min()
        tie_rows = np.nonzero(masked == best)[0]
        pairs = set()
        for a in tie_rows:
            for b in np.nonzero(work[a] == best)[0]:
                pairs.add((a, b) if a < b else (b, a))
        if len(pairs) == 1:
            ((i, j),) = pairs
        else:
            key_of = lambda p: (
                min(min_leaf[p[0]], min_leaf[p[1]]),
                max(max_leaf[p[0]], max_leaf[p[1]]),
            )
            i, j = min(pairs, key=key_of)

        height = np.sqrt(best) if ward else best
        a_id, b_id = node_id[i], node_id[j]
        if a_id > b_id:
            a_id, b_id = b_id, a_id
        out[step] = (a_id, b_id, height, size[i] + size[j])

        others = np.nonzero(active)[0]
        others = others[(others != i) & (others != j)]
        if others.size:
            d_a = work[i, others]
            d_b = work[j, others]
            if ward:
                s_i, s_j, s_k = size[i], size[j], size[others]
                merged = ((s_i + s_k) * d_a + (s_j + s_k) * d_b - s_k * best) / (
                    s_i + s_j + s_k
                )
            elif method == COMPLETE:
                merged = np.maximum(d_a, d_b)
            else:
                merged = (size[i] * d_a + size[j] * d_b) / (size[i] + size[j])
            work[i, others] = merged
            work[others, i] = merged
        work[i, j] = work[j, i] = np.inf
        work[j, :] = np.inf
        work[:, j] = np.inf
        active[j] = False
        size[i] += size[j]
        min_leaf[i] = min(min_leaf[i], min_leaf[j])
        max_leaf[i] = max(max_leaf[i], max_leaf[j])
        node_id[i] = n + step

        # Refresh the row-minimum cache: row i changed everywhere; another
        # row only needs a rescan if its cached minimum pointed into the
        # merged pair and did not get beaten by its new distance to i.
        row_min[i] = work[i].min()
        row_arg[i] = work[i].argmin()
        if others.size:
            new_vals = work[others, i]
            improved = new_vals < row_min[others]
            row_min[others[improved]] = new_vals[improved]
            row_arg[others[improved]] = i
            stale = others[
                ~improved & ((row_arg[others] == i) | (row_arg[others] == j))
            ]
            if stale.size:
                row_min[stale] = work[stale].min(axis=1)
                row_arg[stale] = work[stale].argmin(axis=1)
    return out


def silhouette_samples(dmat: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Per-point silhouette values; singleton clusters score 0."""
    n = labels.shape[0]
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.empty((n, k))
    for c in range(k):
        sums[:, c] = dmat[:, labels == c].sum(axis=1)
    rows = np.arange(n)
    own_count = counts[labels]
    a = np.zeros(n)
    multi = own_count > 1
    a[multi] = sums[rows[multi], labels[multi]] / (own_count[multi] - 1.0)
    means = sums / counts[None, :]
    means[rows, labels] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = multi & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return s


def pooled_within_ss(sq_dmat: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Tibshirani's W: sum over clusters of (pairwise squared sums) / (2 n_c)."""
    onehot = np.zeros((labels.shape[0], k))
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    counts = onehot.sum(axis=0)
    cluster_sums = np.einsum("ic,ij,jc->c", onehot, sq_dmat, onehot, optimize=True)
    return float((cluster_sums / (2.0 * counts)).sum())
