# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled clustering inner loops.

Semantics (including merge tie-breaking and the association order of the
Lance-Williams update) are kept identical to ``_pykernels``; the module is
built with FP contraction disabled so dendrograms match the fallback bit
for bit.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt

WARD, COMPLETE, AVERAGE = 0, 1, 2

BACKEND_NAME = "compiled"


cdef inline void _rescan_row(double[:, ::1] work, Py_ssize_t row,
                             double[::1] row_min, long[::1] row_arg,
                             Py_ssize_t n) nogil:
    cdef Py_ssize_t c
    cdef double m = INFINITY
    cdef long arg = 0
    for c in range(n):
        if work[row, c] < m:
            m = work[row, c]
            arg = c
    row_min[row] = m
    row_arg[row] = arg


def agglomerate(double[:, ::1] work, int method):
    """See ``_pykernels.agglomerate``; same contract, C inner loops.

    Uses the same exact row-minimum cache as the fallback, so selection
    (and the dendrogram) is identical.
    """
    cdef Py_ssize_t n = work.shape[0]
    cdef double[::1] size = np.ones(n)
    cdef long[::1] min_leaf = np.arange(n, dtype=np.int64)
    cdef long[::1] max_leaf = np.arange(n, dtype=np.int64)
    cdef long[::1] node_id = np.arange(n, dtype=np.int64)
    cdef unsigned char[::1] active = np.ones(n, dtype=np.uint8)
    cdef double[::1] row_min = np.empty(n)
    cdef long[::1] row_arg = np.empty(n, dtype=np.int64)
    out_arr = np.empty((n - 1, 4))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t step, a, b, i, j, k
    cdef double best, d, d_a, d_b, merged, height, v
    cdef double s_i, s_j, s_k
    cdef long key_lo, key_hi, cand_lo, cand_hi
    cdef long a_id, b_id
    cdef bint ward = method == WARD
    cdef bint complete = method == COMPLETE
    cdef bint have_pair

    for a in range(n):
        _rescan_row(work, a, row_min, row_arg, n)

    for step in range(n - 1):
        best = INFINITY
        for a in range(n):
            if active[a] and row_min[a] < best:
                best = row_min[a]
        # Enumerate every pair at the minimum and keep the smallest
        # (min leaf, max leaf) key; usually there is exactly one.
        i = 0
        j = 0
        key_lo = 0
        key_hi = 0
        have_pair = False
        for a in range(n):
            if not active[a] or row_min[a] != best:
                continue
            for b in range(a + 1, n):
                if not active[b] or work[a, b] != best:
                    continue
                cand_lo = min_leaf[a] if min_leaf[a] < min_leaf[b] else min_leaf[b]
                cand_hi = max_leaf[a] if max_leaf[a] > max_leaf[b] else max_leaf[b]
                if (not have_pair or cand_lo < key_lo
                        or (cand_lo == key_lo and cand_hi < key_hi)):
                    have_pair = True
                    i = a
                    j = b
                    key_lo = cand_lo
                    key_hi = cand_hi

        height = sqrt(best) if ward else best
        a_id = node_id[i]
        b_id = node_id[j]
        if a_id > b_id:
            a_id, b_id = b_id, a_id
        out[step, 0] = a_id
        out[step, 1] = b_id
        out[step, 2] = height
        out[step, 3] = size[i] + size[j]

        s_i = size[i]
        s_j = size[j]
        for k in range(n):
            if k == i or k == j or not active[k]:
                continue
            d_a = work[i, k]
            d_b = work[j, k]
            if ward:
                s_k = size[k]
                merged = ((s_i + s_k) * d_a + (s_j + s_k) * d_b - s_k * best) / (
                    s_i + s_j + s_k
                )
            elif complete:
                merged = d_a if d_a > d_b else d_b
            else:
                merged = (s_i * d_a + s_j * d_b) / (s_i + s_j)
            work[i, k] = merged
            work[k, i] = merged
        work[i, j] = INFINITY
        work[j, i] = INFINITY
        for k in range(n):
            work[j, k] = INFINITY
            work[k, j] = INFINITY
        active[j] = 0
        size[i] = s_i + s_j
        if min_leaf[j] < min_leaf[i]:
            min_leaf[i] = min_leaf[j]
        if max_leaf[j] > max_leaf[i]:
            max_leaf[i] = max_leaf[j]
        node_id[i] = n + step

        _rescan_row(work, i, row_min, row_arg, n)
        for k in range(n):
            if not active[k] or k == i:
                continue
            v = work[k, i]
            if v < row_min[k]:
                row_min[k] = v
                row_arg[k] = i
            elif row_arg[k] == i or row_arg[k] == j:
                _rescan_row(work, k, row_min, row_arg, n)
    return out_arr


def silhouette_samples(double[:, ::1] dmat, long[::1] labels, int k):
    """Per-point silhouette values; singleton clusters score 0."""
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t i, j, c
    sums_arr = np.zeros((n, k))
    cdef double[:, ::1] sums = sums_arr
    counts_arr = np.zeros(k)
    cdef double[::1] counts = counts_arr
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double a, b, m, denom

    for i in range(n):
        counts[labels[i]] += 1.0
    for i in range(n):
        for j in range(n):
            sums[i, labels[j]] += dmat[i, j]
    for i in range(n):
        c = labels[i]
        if counts[c] <= 1.0:
            out[i] = 0.0
            continue
        a = sums[i, c] / (counts[c] - 1.0)
        b = INFINITY
        for j in range(k):
            if j == c or counts[j] == 0.0:
                continue
            m = sums[i, j] / counts[j]
            if m < b:
                b = m
        denom = a if a > b else b
        out[i] = (b - a) / denom if denom > 0.0 else 0.0
    return out_arr


def pooled_within_ss(double[:, ::1] sq_dmat, long[::1] labels, int k):
    """Tibshirani's W: sum over clusters of (pairwise squared sums) / (2 n_c)."""
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t i, j, c
    cluster_arr = np.zeros(k)
    cdef double[::1] cluster_sums = cluster_arr
    counts_arr = np.zeros(k)
    cdef double[::1] counts = counts_arr
    cdef double total = 0.0

    for i in range(n):
        counts[labels[i]] += 1.0
    for i in range(n):
        c = labels[i]
        for j in range(n):
            if labels[j] == c:
                cluster_sums[c] += sq_dmat[i, j]
    for c in range(k):
        if counts[c] > 0.0:
            total += cluster_sums[c] / (2.0 * counts[c])
    return total
