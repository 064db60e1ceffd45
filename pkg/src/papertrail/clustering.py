"""Hierarchical clustering of CLR-transformed publication compositions.

The model-selection protocol: agglomerate (Ward by default) on Euclidean
distances between CLR vectors, score k = 2..15 by average silhouette width,
validate with the gap statistic (uniform bounding-box reference sets, 100
Monte Carlo iterations), pick the silhouette argmax (smallest k on ties),
cut the dendrogram there, and report per-cluster centroids as means in the
original proportion space, so structural zeros stay exact zeros.

Determinism: merge ties are broken by the smallest (min leaf, max leaf) key
over the merged pair, and every gap replicate draws from its own seed
substream ``(seed, replicate)``, so results are bit-identical across runs
and independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .composition import (
    CompositionVector,
    DEFAULT_ZERO_REPLACEMENT,
    PeriodWindows,
    ZeroReplacement,
    bin_counts,
    clr_matrix,
    composition_rows,
    distance_matrix,
)
from .errors import (
    AllZero,
    DegenerateData,
    EmptyCluster,
    EmptyCurves,
    FewerThanTwoPoints,
    KOutOfRange,
    SingleCluster,
)
from .resolution import ResearcherProfile

DEFAULT_K_RANGE = (2, 15)
DEFAULT_GAP_ITERATIONS = 100


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Agglomerative merge tree: leaves 0..n-1, merge i creates node n+i."""

    n_leaves: int
    merges: np.ndarray  # (n-1, 4): node_a, node_b, height, cluster size
    method: str

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def to_json(self) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "method": self.method,
            "merges": [
                [int(a), int(b), float(h), int(s)] for a, b, h, s in self.merges
            ],
        }


def hierarchical_cluster(
    dmat: np.ndarray, linkage: str = "ward", backend=None
) -> Dendrogram:
    """Agglomerate a symmetric zero-diagonal distance matrix."""
    dmat = np.asarray(dmat, dtype=np.float64)
    n = dmat.shape[0]
    if n < 2:
        raise FewerThanTwoPoints(f"need at least 2 points, got {n}")
    if dmat.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not np.allclose(dmat, dmat.T, atol=1e-12) or np.any(np.diag(dmat) != 0):
        raise ValueError("distance matrix must be symmetric with a zero diagonal")
    method = kernels.LINKAGE_METHODS.get(linkage.lower())
    if method is None:
        raise ValueError(f"unknown linkage {linkage!r} (ward, complete, average)")
    merges = kernels.agglomerate(dmat, method, backend=backend)
    return Dendrogram(n_leaves=n, merges=merges, method=linkage.lower())


def _canonical_labels(roots: Sequence[int]) -> np.ndarray:
    """Relabel arbitrary group ids to 0.. in order of first appearance."""
    mapping: dict[int, int] = {}
    labels = np.empty(len(roots), dtype=np.int64)
    for leaf, root in enumerate(roots):
        if root not in mapping:
            mapping[root] = len(mapping)
        labels[leaf] = mapping[root]
    return labels


def cut_levels(dendrogram: Dendrogram, ks: Iterable[int]) -> dict[int, np.ndarray]:
    """Labels for several cluster counts in one pass over the merge list."""
    n = dendrogram.n_leaves
    wanted = sorted(set(int(k) for k in ks), reverse=True)
    for k in wanted:
        if not 1 <= k <= n:
            raise KOutOfRange(f"k={k} outside 1..{n}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out: dict[int, np.ndarray] = {}
    position = 0
    for t in range(n + 1):  # after t merges there are n - t clusters
        while position < len(wanted) and wanted[position] == n - t:
            out[n - t] = _canonical_labels([find(leaf) for leaf in range(n)])
            position += 1
        if position == len(wanted) or t == n - 1:
            break
        a, b, _, _ = dendrogram.merges[t]
        new = n + t
        parent[int(a)] = new
        parent[int(b)] = new
    return out


def cut_tree(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Assignments with exactly k clusters (undoes the last k-1 merges)."""
    return cut_levels(dendrogram, [k])[int(k)]


def silhouette(
    labels: np.ndarray, dmat: np.ndarray, backend=None
) -> tuple[np.ndarray, float]:
    """Per-point silhouette values and their arithmetic mean.

    s(i) = (b(i) - a(i)) / max(a(i), b(i)); points alone in their cluster
    score 0 by convention.
    """
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if labels.size else 0
    if k < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise EmptyCluster("assignments contain an empty cluster label")
    values = kernels.silhouette_samples(dmat, labels, k, backend=backend)
    return values, float(values.mean())


@dataclass(frozen=True)
class GapPoint:
    k: int
    gap: float
    se: float


def gap_statistic(
    points: np.ndarray,
    ks: Sequence[int],
    b_iterations: int = DEFAULT_GAP_ITERATIONS,
    seed: int = 0,
    linkage: str = "ward",
    dendrogram: Optional[Dendrogram] = None,
    sq_dmat: Optional[np.ndarray] = None,
    backend=None,
) -> list[GapPoint]:
    """Gap curve over ``ks`` for hierarchically clustered data.

    gap(k) = mean_b ln W*_kb - ln W_k, where W is the pooled within-cluster
    sum of squared pairwise distances (Tibshirani's normalization) and the
    B reference sets are drawn uniformly from the per-dimension bounding box
    of the data.  s_k = sd_b(ln W*_kb) * sqrt(1 + 1/B).  Replicate b draws
    from substream (seed, b); output is a pure function of
    (data, ks, B, seed).
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2 or np.unique(points, axis=0).shape[0] < 2:
        raise DegenerateData("gap statistic needs at least two distinct points")
    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise EmptyCurves("no k values requested")
    if ks[0] < 1 or ks[-1] > n:
        raise KOutOfRange(f"k range {ks[0]}..{ks[-1]} outside 1..{n}")

    if dendrogram is None or sq_dmat is None:
        dmat, sq_dmat = distance_matrix(points)
        dendrogram = hierarchical_cluster(dmat, linkage, backend=backend)
    data_labels = cut_levels(dendrogram, ks)
    log_w = {}
    for k in ks:
        w = kernels.pooled_within_ss(sq_dmat, data_labels[k], k, backend=backend)
        if w <= 0:
            raise DegenerateData(f"zero within-cluster dispersion at k={k}")
        log_w[k] = np.log(w)

    lo = points.min(axis=0)
    hi = points.max(axis=0)
    log_w_ref = np.empty((b_iterations, len(ks)))
    for b in range(b_iterations):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        ref = rng.uniform(lo, hi, size=points.shape)
        ref_dmat, ref_sq = distance_matrix(ref)
        ref_tree = hierarchical_cluster(ref_dmat, linkage, backend=backend)
        ref_labels = cut_levels(ref_tree, ks)
        for pos, k in enumerate(ks):
            w = kernels.pooled_within_ss(ref_sq, ref_labels[k], k, backend=backend)
            if w <= 0:
                raise DegenerateData(
                    f"degenerate reference replicate {b} at k={k} (zero dispersion)"
                )
            log_w_ref[b, pos] = np.log(w)

    curve = []
    for pos, k in enumerate(ks):
        column = log_w_ref[:, pos]
        gap = float(column.mean() - log_w[k])
        se = float(column.std(ddof=0) * np.sqrt(1.0 + 1.0 / b_iterations))
        curve.append(GapPoint(k=k, gap=gap, se=se))
    return curve


def gap_criterion_k(curve: Sequence[GapPoint]) -> int:
    """Smallest k with gap(k) >= gap(k+1) - se(k+1); last k if none qualifies."""
    if not curve:
        raise EmptyCurves("empty gap curve")
    ordered = sorted(curve, key=lambda p: p.k)
    for current, following in zip(ordered, ordered[1:]):
        if current.gap >= following.gap - following.se:
            return current.k
    return ordered[-1].k


def select_k(
    silhouette_by_k: Mapping[int, float], gap_curve: Sequence[GapPoint]
) -> tuple[int, bool]:
    """Silhouette argmax (smallest k on ties); flag whether the gap rule agrees."""
    if not silhouette_by_k or not gap_curve:
        raise EmptyCurves("model selection needs both quality curves")
    best_k = min(
        silhouette_by_k,
        key=lambda k: (-silhouette_by_k[k], k),
    )
    return best_k, gap_criterion_k(gap_curve) == best_k


@dataclass(frozen=True)
class ClusterStat:
    centroid: CompositionVector
    size: int
    share: float  # exact fraction of clustered profiles
    percent: int  # display rounding of share

    def to_json(self) -> dict:
        return {
            "centroid": [
                self.centroid.p_before,
                self.centroid.p_during,
                self.centroid.p_after,
            ],
            "size": self.size,
            "share": self.share,
            "percent": self.percent,
        }


def _display_percent(share: float) -> int:
    return int(np.floor(share * 100.0 + 0.5))


def cluster_centroids(
    labels: np.ndarray, compositions: np.ndarray
) -> list[ClusterStat]:
    """Arithmetic-mean centroids in proportion space, with sizes and shares.

    ``compositions`` should be the raw (pre-zero-replacement) proportions so
    that structural zeros are reported as exact zeros.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    if n == 0:
        raise EmptyCluster("no assignments")
    k = int(labels.max()) + 1
    stats = []
    for c in range(k):
        members = compositions[labels == c]
        if members.shape[0] == 0:
            raise EmptyCluster(f"cluster {c} has no members")
        mean = members.mean(axis=0)
        share = members.shape[0] / n
        stats.append(
            ClusterStat(
                centroid=CompositionVector(*mean),
                size=int(members.shape[0]),
                share=float(share),
                percent=_display_percent(share),
            )
        )
    return stats


@dataclass(frozen=True)
class ClusterConfig:
    linkage: str = "ward"
    k_min: int = DEFAULT_K_RANGE[0]
    k_max: int = DEFAULT_K_RANGE[1]
    gap_iterations: int = DEFAULT_GAP_ITERATIONS
    seed: int = 42
    zero_replacement: ZeroReplacement = DEFAULT_ZERO_REPLACEMENT


@dataclass(frozen=True, eq=False)
class ClusterSolution:
    """Everything the temporal-pattern analysis produces for one corpus."""

    k: int
    assignments: dict[str, int]
    silhouette_by_k: dict[int, float]
    gap_curve: tuple[GapPoint, ...]
    clusters: tuple[ClusterStat, ...]
    excluded_profiles: tuple[str, ...]
    linkage: str
    seed: int
    gap_agreement: bool
    windows_label: str
    dendrogram: Optional[Dendrogram] = field(default=None, repr=False)

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.clusters]

    @property
    def avg_silhouette(self) -> float:
        return self.silhouette_by_k[self.k]

    def to_json(self) -> dict:
        payload = {
            "k": self.k,
            "linkage": self.linkage,
            "seed": self.seed,
            "gap_agreement": self.gap_agreement,
            "windows": self.windows_label,
            "assignments": dict(sorted(self.assignments.items())),
            "silhouette_by_k": {str(k): v for k, v in sorted(self.silhouette_by_k.items())},
            "gap_curve": [
                {"k": p.k, "gap": p.gap, "se": p.se}
                for p in sorted(self.gap_curve, key=lambda p: p.k)
            ],
            "clusters": [c.to_json() for c in self.clusters],
            "excluded_profiles": sorted(self.excluded_profiles),
        }
        if self.dendrogram is not None:
            payload["dendrogram"] = self.dendrogram.to_json()
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "ClusterSolution":
        dendrogram = None
        if "dendrogram" in payload:
            d = payload["dendrogram"]
            dendrogram = Dendrogram(
                n_leaves=d["n_leaves"],
                merges=np.asarray(d["merges"], dtype=np.float64),
                method=d["method"],
            )
        return cls(
            k=payload["k"],
            assignments=dict(payload["assignments"]),
            silhouette_by_k={int(k): v for k, v in payload["silhouette_by_k"].items()},
            gap_curve=tuple(
                GapPoint(k=p["k"], gap=p["gap"], se=p["se"])
                for p in payload["gap_curve"]
            ),
            clusters=tuple(
                ClusterStat(
                    centroid=CompositionVector(*c["centroid"]),
                    size=c["size"],
                    share=c["share"],
                    percent=c["percent"],
                )
                for c in payload["clusters"]
            ),
            excluded_profiles=tuple(payload["excluded_profiles"]),
            linkage=payload["linkage"],
            seed=payload["seed"],
            gap_agreement=payload["gap_agreement"],
            windows_label=payload.get("windows", ""),
            dendrogram=dendrogram,
        )


def run_pipeline(
    profiles: Sequence[ResearcherProfile],
    windows: Optional[PeriodWindows] = None,
    config: Optional[ClusterConfig] = None,
    backend=None,
) -> ClusterSolution:
    """Bin -> composition -> CLR -> distances -> cluster -> select k -> centroids.

    Profiles with no publications in any window are excluded and reported in
    the solution.  Needs at least three clusterable profiles (k selection is
    meaningless below that).
    """
    windows = windows or PeriodWindows()
    config = config or ClusterConfig()
    usable: list[ResearcherProfile] = []
    excluded: list[str] = []
    count_rows = []
    for profile in profiles:
        try:
            count_rows.append(bin_counts(profile.pubs_by_year, windows))
        except AllZero:
            excluded.append(profile.profile_id)
            continue
        usable.append(profile)
    n = len(usable)
    if n < 2:
        raise FewerThanTwoPoints(f"only {n} clusterable profiles")
    counts = np.asarray(count_rows, dtype=np.float64)
    raw, smoothed = composition_rows(counts, config.zero_replacement)
    clr_points = clr_matrix(smoothed)
    if np.unique(clr_points, axis=0).shape[0] < 2:
        raise DegenerateData("all profiles share one composition")
    dmat, sq_dmat = distance_matrix(clr_points)
    dendrogram = hierarchical_cluster(dmat, config.linkage, backend=backend)

    ks = list(range(max(2, config.k_min), min(config.k_max, n - 1) + 1))
    if not ks:
        raise DegenerateData(f"too few profiles ({n}) for k in [{config.k_min}, {config.k_max}]")
    labels_by_k = cut_levels(dendrogram, ks)
    silhouette_by_k = {
        k: silhouette(labels_by_k[k], dmat, backend=backend)[1] for k in ks
    }
    gap_curve = gap_statistic(
        clr_points,
        ks,
        b_iterations=config.gap_iterations,
        seed=config.seed,
        linkage=config.linkage,
        dendrogram=dendrogram,
        sq_dmat=sq_dmat,
        backend=backend,
    )
    chosen_k, agreement = select_k(silhouette_by_k, gap_curve)
    labels = labels_by_k[chosen_k]
    clusters = cluster_centroids(labels, raw)
    assignments = {
        profile.profile_id: int(labels[idx]) for idx, profile in enumerate(usable)
    }
    return ClusterSolution(
        k=chosen_k,
        assignments=assignments,
        silhouette_by_k=silhouette_by_k,
        gap_curve=tuple(gap_curve),
        clusters=tuple(clusters),
        excluded_profiles=tuple(excluded),
        linkage=config.linkage,
        seed=config.seed,
        gap_agreement=agreement,
        windows_label=windows.label(),
        dendrogram=dendrogram,
    )
