"""Report tables and their renderers (CSV, JSON, Markdown, SVG bar chart).

Tables carry typed rows plus optional grouping: a subtotal row closes each
group and a grand-total row closes the table.  Arithmetic invariants
(subtotals = sum of their group rows, grand total = sum of subtotals) are
asserted before every render, so a table that renders is internally
consistent.  Rendering is a pure function of the table - goldens can be
pinned byte for byte.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional, Sequence

from .clustering import ClusterSolution
from .corpus import DocumentType, PublicationRecord
from .errors import UnsupportedFormat
from .funding import NewGrantee
from .resolution import ResearcherProfile


class RowKind(enum.Enum):
    DATA = "data"
    SUBTOTAL = "subtotal"
    TOTAL = "total"


@dataclass(frozen=True)
class Row:
    values: tuple
    kind: RowKind = RowKind.DATA


@dataclass(frozen=True, eq=False)
class ReportTable:
    title: str
    columns: tuple[str, ...]
    rows: tuple[Row, ...]
    numeric_columns: tuple[int, ...] = ()  # indices summed for subtotal checks
    chart_value_column: Optional[int] = None  # bar length source for SVG
    metadata: dict = field(default_factory=dict)

    def data_rows(self) -> list[Row]:
        return [r for r in self.rows if r.kind is RowKind.DATA]

    def check_invariants(self) -> None:
        """Raise ValueError unless subtotal/total arithmetic is consistent."""
        if not self.numeric_columns:
            return
        group_acc = {i: 0 for i in self.numeric_columns}
        subtotal_acc = {i: 0 for i in self.numeric_columns}
        saw_subtotal = False
        for row in self.rows:
            if row.kind is RowKind.DATA:
                for i in self.numeric_columns:
                    group_acc[i] += row.values[i]
            elif row.kind is RowKind.SUBTOTAL:
                saw_subtotal = True
                for i in self.numeric_columns:
                    if row.values[i] != group_acc[i]:
                        raise ValueError(
                            f"{self.title}: subtotal column {i} is {row.values[i]}, "
                            f"group sums to {group_acc[i]}"
                        )
                    subtotal_acc[i] += row.values[i]
                group_acc = {i: 0 for i in self.numeric_columns}
            else:
                expected = subtotal_acc if saw_subtotal else None
                for i in self.numeric_columns:
                    want = (expected or group_acc)[i]
                    if row.values[i] != want:
                        raise ValueError(
                            f"{self.title}: grand total column {i} is "
                            f"{row.values[i]}, expected {want}"
                        )


# ---------------------------------------------------------------------------
# Table builders
# ---------------------------------------------------------------------------

ARTICLE_TYPES = frozenset({DocumentType.RESEARCH_ARTICLE, DocumentType.REVIEW_ARTICLE})


def publisher_rollup(records: Iterable[PublicationRecord]) -> ReportTable:
    """Per (publisher, journal) publication and citation counts with rollups.

    The grand-total row covers all documents; the metadata also carries an
    articles-only total (research + review articles) because sources
    sometimes roll chapters into citations but not into counts - reporting
    both exposes the discrepancy instead of hiding it.
    """
    per_journal: dict[tuple[str, str], list[int]] = {}
    article_count = 0
    article_citations = 0
    for record in records:
        key = (record.publisher, record.source_title)
        slot = per_journal.setdefault(key, [0, 0])
        slot[0] += 1
        slot[1] += record.times_cited
        if record.document_type in ARTICLE_TYPES:
            article_count += 1
            article_citations += record.times_cited
    rows: list[Row] = []
    grand = [0, 0]
    current_publisher = None
    publisher_acc = [0, 0]

    def close_publisher():
        if current_publisher is not None:
            rows.append(
                Row(
                    (f"{current_publisher} Total", "", publisher_acc[0], publisher_acc[1]),
                    RowKind.SUBTOTAL,
                )
            )

    for publisher, journal in sorted(per_journal):
        count, cited = per_journal[(publisher, journal)]
        if publisher != current_publisher:
            close_publisher()
            current_publisher = publisher
            publisher_acc = [0, 0]
        rows.append(Row((publisher, journal, count, cited)))
        publisher_acc[0] += count
        publisher_acc[1] += cited
        grand[0] += count
        grand[1] += cited
    close_publisher()
    rows.append(Row(("Grand Total", "", grand[0], grand[1]), RowKind.TOTAL))
    return ReportTable(
        title="Publications and citations by publisher and journal",
        columns=("Publisher", "Source title", "Publications", "Times cited"),
        rows=tuple(rows),
        numeric_columns=(2, 3),
        metadata={
            "article_count": article_count,
            "article_citations": article_citations,
            "all_document_count": grand[0],
            "all_document_citations": grand[1],
        },
    )


def cluster_report(solution: ClusterSolution) -> ReportTable:
    """One row per cluster, largest first: centroid shares, size, percent."""
    order = sorted(
        range(len(solution.clusters)),
        key=lambda i: (-solution.clusters[i].size, i),
    )
    rows = []
    for display_rank, idx in enumerate(order, start=1):
        stat = solution.clusters[idx]
        rows.append(
            Row(
                (
                    display_rank,
                    f"{stat.centroid.p_before:.3f}",
                    f"{stat.centroid.p_during:.3f}",
                    f"{stat.centroid.p_after:.3f}",
                    stat.size,
                    stat.percent,
                )
            )
        )
    total = sum(stat.size for stat in solution.clusters)
    rows.append(Row(("Total", "", "", "", total, sum(
        stat.percent for stat in solution.clusters)), RowKind.TOTAL))
    return ReportTable(
        title="Temporal publication archetypes",
        columns=("Cluster", "Before", "During", "After", "Authors", "Percent"),
        rows=tuple(rows),
        numeric_columns=(4,),
        metadata={
            "k": solution.k,
            "linkage": solution.linkage,
            "avg_silhouette": solution.avg_silhouette,
            "gap_agreement": solution.gap_agreement,
            "windows": solution.windows_label,
        },
    )


def country_counts(profiles: Iterable[ResearcherProfile]) -> ReportTable:
    """Author counts per country; multi-country authors count once per country."""
    counts: dict[str, int] = {}
    multi = []
    for profile in profiles:
        if len(profile.countries) > 1:
            multi.append(profile.profile_id)
        for country in profile.countries:
            counts[country] = counts.get(country, 0) + 1
    rows = [
        Row((country, count))
        for country, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    return ReportTable(
        title="Author countries",
        columns=("Country", "Authors"),
        rows=tuple(rows),
        numeric_columns=(),
        chart_value_column=1,
        metadata={"multi_country_profiles": sorted(multi)},
    )


def year_counts_table(per_year: dict[int, int]) -> ReportTable:
    rows = [Row((year, count)) for year, count in sorted(per_year.items())]
    return ReportTable(
        title="Publications per year",
        columns=("Year", "Publications"),
        rows=tuple(rows),
        chart_value_column=1,
    )


def new_grantee_table(grantees: Sequence[NewGrantee]) -> ReportTable:
    """Funding agencies and countries of post-window first-time grantees."""
    rows = []
    agencies: set[str] = set()
    countries: set[str] = set()
    usd_total = sum((g.usd_total for g in grantees), start=Decimal(0))
    for grantee in sorted(grantees, key=lambda g: g.profile_id):
        agencies.update(grantee.agencies)
        countries.update(grantee.countries)
        rows.append(
            Row(
                (
                    grantee.canonical_name,
                    "; ".join(grantee.agencies),
                    "; ".join(grantee.countries),
                    str(grantee.usd_total),
                )
            )
        )
    return ReportTable(
        title="First-time grantees after network participation",
        columns=("Researcher", "Funding agencies", "Countries", "USD equivalent"),
        rows=tuple(rows),
        metadata={
            "new_grantee_count": len(rows),
            "agency_count": len(agencies),
            "agencies": sorted(agencies),
            "country_count": len(countries),
            "countries": sorted(countries),
            "usd_equivalent_total": str(usd_total),
        },
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render(table: ReportTable, format: str = "csv") -> bytes:
    """Render a table to bytes; identical inputs give identical bytes."""
    table.check_invariants()
    if format == "csv":
        return _render_csv(table)
    if format == "json":
        return _render_json(table)
    if format == "md":
        return _render_md(table)
    if format == "svg":
        return _render_svg(table)
    raise UnsupportedFormat(f"unknown render format {format!r}")


def _render_csv(table: ReportTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(row.values)
    return buf.getvalue().encode("utf-8")


def _render_json(table: ReportTable) -> bytes:
    payload = {
        "title": table.title,
        "columns": list(table.columns),
        "rows": [
            {"kind": row.kind.value, "values": list(row.values)} for row in table.rows
        ],
        "metadata": table.metadata,
    }
    return (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode(
        "utf-8"
    )


def _render_md(table: ReportTable) -> bytes:
    lines = [f"### {table.title}", ""]
    lines.append("| " + " | ".join(table.columns) + " |")
    lines.append("|" + "|".join([" --- "] * len(table.columns)) + "|")
    for row in table.rows:
        cells = [str(v) for v in row.values]
        if row.kind is not RowKind.DATA:
            cells = [f"**{c}**" if c else "" for c in cells]
        lines.append("| " + " | ".join(cells) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


SVG_WIDTH = 640
SVG_BAR_HEIGHT = 18
SVG_GAP = 6
SVG_LABEL_WIDTH = 220
SVG_MARGIN = 12


def _first_numeric_column(table: ReportTable) -> Optional[int]:
    for row in table.data_rows():
        for idx, value in enumerate(row.values):
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return idx
    return None


def _render_svg(table: ReportTable) -> bytes:
    """Horizontal bar chart of the first numeric column of the data rows."""
    rows = table.data_rows()
    value_idx = (
        table.chart_value_column
        if table.chart_value_column is not None
        else _first_numeric_column(table)
    )
    bars = []
    if value_idx is not None:
        for row in rows:
            label = " / ".join(
                str(v) for i, v in enumerate(row.values[:value_idx]) if v != ""
            ) or str(row.values[value_idx])
            bars.append((label, float(row.values[value_idx])))
    height = SVG_MARGIN * 2 + 24 + max(1, len(bars)) * (SVG_BAR_HEIGHT + SVG_GAP)
    peak = max((v for _, v in bars), default=0.0)
    scale = (SVG_WIDTH - SVG_LABEL_WIDTH - 2 * SVG_MARGIN - 60) / peak if peak > 0 else 0.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{SVG_MARGIN}" y="{SVG_MARGIN + 10}" font-weight="bold">'
        f"{_svg_escape(table.title)}</text>",
    ]
    y = SVG_MARGIN + 24
    for label, value in bars:
        width = value * scale
        parts.append(
            f'<text x="{SVG_LABEL_WIDTH - 6}" y="{y + SVG_BAR_HEIGHT - 5}" '
            f'text-anchor="end">{_svg_escape(label[:34])}</text>'
        )
        parts.append(
            f'<rect x="{SVG_LABEL_WIDTH}" y="{y}" width="{width:.2f}" '
            f'height="{SVG_BAR_HEIGHT}" fill="#4477aa"/>'
        )
        parts.append(
            f'<text x="{SVG_LABEL_WIDTH + width + 4:.2f}" y="{y + SVG_BAR_HEIGHT - 5}">'
            f"{_format_value(value)}</text>"
        )
        y += SVG_BAR_HEIGHT + SVG_GAP
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def _svg_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _format_value(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return f"{value:.2f}"
