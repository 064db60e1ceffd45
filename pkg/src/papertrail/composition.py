"""Period windows, compositional vectors, and the centered log-ratio map.

Per-researcher publication counts over three periods (before / during /
after a network's active years) are converted to proportions of the
researcher's total output.  Proportions are compositional - only relative
information, constrained to sum to one - so distances are taken in the
log-ratio geometry: the CLR transform

    z_i = ln(c_i) - (1/D) * sum_j ln(c_j)

sends the simplex to the zero-sum hyperplane where plain Euclidean distance
equals the Aitchison distance between the source compositions.

Structural zeros (a researcher with no output in a period) are handled by
multiplicative replacement before the transform: zeros become
``delta = pseudocount / total`` (capped at ``1/(2D)`` so tiny totals stay on
the open simplex) and the nonzero parts are rescaled by ``1 - z * delta``,
preserving their ratios.  Raw (pre-replacement) proportions are kept for
reporting, so structural zeros still display as exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import AllZero, NonPositiveComponent

N_PERIODS = 3


@dataclass(frozen=True)
class PeriodWindows:
    """Three consecutive year windows; outer ends are open-ended.

    ``before_start`` / ``after_end`` are display bounds only: binning folds
    any year at or below ``before_end`` into the first window and any year
    at or above ``after_start`` into the last, so every publication year is
    assigned to exactly one window.
    """

    before_start: Optional[int] = 2015
    before_end: int = 2018
    during_start: int = 2019
    during_end: int = 2022
    after_start: int = 2023
    after_end: Optional[int] = 2025

    def __post_init__(self):
        if not (self.before_end < self.during_start <= self.during_end < self.after_start):
            raise ValueError("period windows must be ordered and non-overlapping")
        if self.before_end + 1 != self.during_start or self.during_end + 1 != self.after_start:
            raise ValueError("period windows must be consecutive (no gap years)")

    @classmethod
    def parse(cls, text: str) -> "PeriodWindows":
        """Parse "2015-2018,2019-2022,2023-2025" into windows."""
        ranges = []
        for part in text.split(","):
            lo, hi = part.strip().split("-")
            ranges.append((int(lo), int(hi)))
        if len(ranges) != N_PERIODS:
            raise ValueError(f"expected three year ranges, got {len(ranges)}")
        (b0, b1), (d0, d1), (a0, a1) = ranges
        return cls(
            before_start=b0, before_end=b1,
            during_start=d0, during_end=d1,
            after_start=a0, after_end=a1,
        )

    def label(self) -> str:
        b0 = str(self.before_start) if self.before_start is not None else ""
        a1 = str(self.after_end) if self.after_end is not None else ""
        return (
            f"{b0}-{self.before_end},{self.during_start}-{self.during_end},"
            f"{self.after_start}-{a1}"
        )


@dataclass(frozen=True)
class CompositionVector:
    """Shares of a researcher's output in each period (sum to 1, zeros allowed)."""

    p_before: float
    p_during: float
    p_after: float

    def __post_init__(self):
        parts = (self.p_before, self.p_during, self.p_after)
        if any(p < 0 for p in parts):
            raise ValueError(f"negative composition part: {parts}")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise ValueError(f"composition parts sum to {sum(parts)}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_before, self.p_during, self.p_after], dtype=np.float64)


@dataclass(frozen=True)
class CLRVector:
    """CLR image of a composition; components sum to zero."""

    z_before: float
    z_during: float
    z_after: float

    def __post_init__(self):
        total = self.z_before + self.z_during + self.z_after
        if abs(total) > 1e-9:
            raise ValueError(f"CLR components sum to {total}, not 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.z_before, self.z_during, self.z_after], dtype=np.float64)


@dataclass(frozen=True)
class ZeroReplacement:
    """Multiplicative zero replacement: zeros get ``pseudocount / total``."""

    pseudocount: float = 0.5

    def delta(self, total: float) -> float:
        # Cap keeps tiny totals (1-2 publications) strictly inside the simplex.
        return min(self.pseudocount / total, 1.0 / (2 * N_PERIODS))


DEFAULT_ZERO_REPLACEMENT = ZeroReplacement()


def bin_counts(
    pubs_by_year: Mapping[int, int], windows: PeriodWindows
) -> tuple[int, int, int]:
    """Total publications per window; outer windows absorb out-of-range years."""
    n_before = n_during = n_after = 0
    for year, count in pubs_by_year.items():
        if year <= windows.before_end:
            n_before += count
        elif year <= windows.during_end:
            n_during += count
        else:
            n_after += count
    if n_before + n_during + n_after == 0:
        raise AllZero("profile has no publications in any period")
    return n_before, n_during, n_after


def raw_proportions(counts: Iterable[float]) -> CompositionVector:
    """Plain counts/total shares; zeros preserved (used for reporting)."""
    values = [float(c) for c in counts]
    total = sum(values)
    if total <= 0:
        raise AllZero("cannot form proportions of an all-zero count vector")
    return CompositionVector(*(v / total for v in values))


def to_composition(
    counts: Iterable[float],
    strategy: ZeroReplacement = DEFAULT_ZERO_REPLACEMENT,
) -> CompositionVector:
    """Counts -> strictly positive composition (zero-replaced if needed).

    With no zero counts this is exactly ``counts / total``; otherwise zeros
    become ``delta`` and nonzero parts are scaled by ``1 - z * delta`` (z =
    number of zeros), which preserves the ratios of the nonzero parts.
    """
    values = [float(c) for c in counts]
    if len(values) != N_PERIODS:
        raise ValueError(f"expected {N_PERIODS} period counts, got {len(values)}")
    total = sum(values)
    if total <= 0:
        raise AllZero("cannot form a composition from an all-zero count vector")
    zeros = sum(1 for v in values if v == 0)
    if zeros == 0:
        return CompositionVector(*(v / total for v in values))
    delta = strategy.delta(total)
    scale = 1.0 - zeros * delta
    return CompositionVector(
        *((delta if v == 0 else (v / total) * scale) for v in values)
    )


def clr(composition: CompositionVector) -> CLRVector:
    """Center log-transformed parts on their geometric mean."""
    parts = (composition.p_before, composition.p_during, composition.p_after)
    if any(p <= 0 for p in parts):
        raise NonPositiveComponent(
            f"CLR undefined for non-positive parts: {parts} (apply zero replacement)"
        )
    logs = [math.log(p) for p in parts]
    mean = sum(logs) / len(logs)
    return CLRVector(*(l - mean for l in logs))


def clr_matrix(compositions: np.ndarray) -> np.ndarray:
    """Row-wise CLR of an (n, D) matrix of strictly positive compositions."""
    if np.any(compositions <= 0):
        raise NonPositiveComponent("CLR undefined for non-positive parts")
    logs = np.log(compositions)
    return logs - logs.mean(axis=1, keepdims=True)


def pairwise_distance(a: CLRVector, b: CLRVector) -> float:
    """Euclidean distance between CLR images (the Aitchison distance)."""
    return float(np.linalg.norm(a.as_array() - b.as_array()))


def distance_matrix(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs Euclidean distances of an (n, D) matrix.

    Returns ``(distances, squared_distances)``.  Uses the explicit
    difference form, so the matrix is exactly symmetric with a zero
    diagonal (no Gram-trick cancellation artifacts).
    """
    diffs = points[:, None, :] - points[None, :, :]
    squared = np.einsum("ijk,ijk->ij", diffs, diffs)
    return np.sqrt(squared), squared


def composition_rows(
    counts: np.ndarray,
    strategy: ZeroReplacement = DEFAULT_ZERO_REPLACEMENT,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized raw + zero-replaced proportions for an (n, D) count matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise AllZero("count matrix contains an all-zero row")
    raw = counts / totals
    zeros = counts == 0
    z = zeros.sum(axis=1, keepdims=True)
    delta = np.minimum(strategy.pseudocount / totals, 1.0 / (2 * counts.shape[1]))
    smoothed = np.where(zeros, delta, raw * (1.0 - z * delta))
    return raw, smoothed
