"""Co-authorship graph and the egocentric features used as fraud signals.

The graph is tiny (hundreds of nodes), so adjacency is kept in plain
dictionaries; edge weights count shared papers.  Clustering coefficients,
citation statistics, and author-count anomaly flags are the features this
toolkit reports; no community detection or citation-graph construction.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .corpus import PublicationRecord
from .errors import EmptyCorpus, NodeNotFound
from .resolution import ResearcherProfile, mention_source_id, source_to_profile


@dataclass(frozen=True, eq=False)
class CoauthorGraph:
    nodes: frozenset[str]
    edges: dict[tuple[str, str], int]  # key is the sorted profile pair
    adjacency: dict[str, frozenset[str]]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, node: str) -> int:
        if node not in self.nodes:
            raise NodeNotFound(f"unknown profile {node!r}")
        return len(self.adjacency.get(node, frozenset()))

    def weight(self, a: str, b: str) -> int:
        return self.edges.get((min(a, b), max(a, b)), 0)


def build_coauthor_graph(
    records: Iterable[PublicationRecord],
    profiles: Iterable[ResearcherProfile],
) -> CoauthorGraph:
    """One edge per unordered profile pair co-listed on >= 1 paper.

    Author mentions are mapped to profiles through their source IDs; a
    profile listed twice on one paper (merged duplicate IDs) contributes no
    self-loop.
    """
    lookup = source_to_profile(profiles)
    nodes: set[str] = set()
    edges: Counter = Counter()
    neighbors: dict[str, set[str]] = {}
    for record in records:
        on_paper: set[str] = set()
        for mention in record.authors:
            profile = lookup.get(mention_source_id(mention))
            if profile is not None:
                on_paper.add(profile.profile_id)
        nodes.update(on_paper)
        ordered = sorted(on_paper)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                edges[(a, b)] += 1
                neighbors.setdefault(a, set()).add(b)
                neighbors.setdefault(b, set()).add(a)
    return CoauthorGraph(
        nodes=frozenset(nodes),
        edges=dict(edges),
        adjacency={n: frozenset(v) for n, v in neighbors.items()},
    )


def local_clustering_coefficient(graph: CoauthorGraph, node: str) -> float:
    """(2 x triangles through node) / (deg x (deg - 1)); degree < 2 scores 0."""
    if node not in graph.nodes:
        raise NodeNotFound(f"unknown profile {node!r}")
    neighbors = sorted(graph.adjacency.get(node, frozenset()))
    degree = len(neighbors)
    if degree < 2:
        return 0.0
    triangles = 0
    for i, a in enumerate(neighbors):
        adjacency_a = graph.adjacency[a]
        for b in neighbors[i + 1 :]:
            if b in adjacency_a:
                triangles += 1
    return 2.0 * triangles / (degree * (degree - 1))


def average_clustering(graph: CoauthorGraph) -> float:
    """Mean local clustering coefficient over all nodes (0 for an empty graph)."""
    if not graph.nodes:
        return 0.0
    total = sum(local_clustering_coefficient(graph, n) for n in sorted(graph.nodes))
    return total / len(graph.nodes)


@dataclass(frozen=True)
class CitationStats:
    mean: float
    median: float
    total: int
    uncited_count: int
    low_cited_count: int  # cited fewer than 10 times (includes uncited)
    paper_count: int

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "total": self.total,
            "uncited_count": self.uncited_count,
            "low_cited_count": self.low_cited_count,
            "paper_count": self.paper_count,
        }


LOW_CITATION_THRESHOLD = 10


def citation_stats(records: Iterable[PublicationRecord]) -> CitationStats:
    """Mean/median/total citations plus uncited and low-cited counts.

    The median is the midpoint of the two central values for even counts;
    the total is exact integer arithmetic.
    """
    counts = [record.times_cited for record in records]
    if not counts:
        raise EmptyCorpus("citation statistics need at least one record")
    total = sum(counts)
    return CitationStats(
        mean=total / len(counts),
        median=float(statistics.median(counts)),
        total=total,
        uncited_count=sum(1 for c in counts if c == 0),
        low_cited_count=sum(1 for c in counts if c < LOW_CITATION_THRESHOLD),
        paper_count=len(counts),
    )


@dataclass(frozen=True)
class AuthorCountReport:
    histogram: dict[int, int]  # author count -> number of papers
    flagged: tuple[str, ...]  # publication_ids above the threshold
    threshold: int
    mean_authors: float
    norm_ratio: Optional[float]  # mean over the supplied field norm, if any

    def to_json(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "flagged": list(self.flagged),
            "threshold": self.threshold,
            "mean_authors": self.mean_authors,
            "norm_ratio": self.norm_ratio,
        }


def author_count_anomalies(
    records: Iterable[PublicationRecord],
    threshold: int = 25,
    field_norm: Optional[float] = None,
) -> AuthorCountReport:
    """Histogram of author counts plus flags for records above the threshold."""
    if threshold < 1:
        raise ValueError("threshold must be at least 1")
    histogram: Counter = Counter()
    flagged = []
    total_authors = 0
    n = 0
    for record in records:
        count = len(record.authors)
        histogram[count] += 1
        total_authors += count
        n += 1
        if count > threshold:
            flagged.append(record.publication_id)
    mean_authors = total_authors / n if n else 0.0
    return AuthorCountReport(
        histogram=dict(histogram),
        flagged=tuple(flagged),
        threshold=threshold,
        mean_authors=mean_authors,
        norm_ratio=(mean_authors / field_norm) if field_norm else None,
    )
