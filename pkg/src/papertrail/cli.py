"""``papertrail`` command line: screen -> resolve -> trust/cluster/network/funding -> report.

Every stage reads files written by the previous one, so the whole pipeline
can be driven from a shell script or a Makefile.  Outputs are deterministic:
running a stage twice on the same inputs produces byte-identical files.

Exit codes: 0 on success, 1 on data errors (bad input files, degenerate
analysis), 2 on usage errors.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from decimal import Decimal
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .clustering import ClusterConfig, ClusterSolution, run_pipeline
from .composition import PeriodWindows
from .corpus import MalformedRow, parse_corpus, parse_grants, per_year_counts, serialize_corpus
from .errors import PapertrailError
from .funding import NewGrantee, aggregate_funding, new_grantees, parse_rates
from .network import (
    author_count_anomalies,
    average_clustering,
    build_coauthor_graph,
    citation_stats,
    local_clustering_coefficient,
)
from .reporting import (
    cluster_report,
    country_counts,
    new_grantee_table,
    publisher_rollup,
    render,
    year_counts_table,
)
from .resolution import (
    parse_careers,
    parse_merges,
    profiles_from_json,
    profiles_to_json,
    propose_merges,
    resolve,
    serialize_merges,
)
from .screening import ScreeningCriteria, screen
from .synth import SynthSpec, generate_corpus, write_outputs
from .trust import corpus_trust_summary, parse_registry


#: Anything user data can legitimately trigger maps to exit code 1.
#: (TOMLDecodeError subclasses ValueError; decimal errors are ArithmeticError.)
DATA_ERRORS = (PapertrailError, ValueError, KeyError, ArithmeticError)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _read_corpus(path: Path, issues: list[MalformedRow] | None = None):
    fmt = "jsonl" if path.suffix == ".jsonl" else "csv"
    with open(path, "rb") as handle:
        return parse_corpus(handle, fmt, issues=issues)


def _load_profiles(path: Path):
    return profiles_from_json(Path(path).read_bytes())


def _write_json(path: Path, payload: dict) -> None:
    Path(path).write_bytes(
        (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode(
            "utf-8"
        )
    )


def _config_section(ctx: click.Context, section: str) -> dict:
    config = ctx.obj or {}
    return config.get(section, {})


def _pick(flag, config_value, default):
    if flag is not None:
        return flag
    if config_value is not None:
        return config_value
    return default


@click.group()
@click.version_option(version=__version__, prog_name="papertrail")
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="TOML file overriding defaults (windows, linkage, seed, thresholds).",
)
@click.pass_context
def main(ctx: click.Context, config: Path | None):
    """Forensic scientometrics toolkit for publication-metadata exports."""
    ctx.obj = {}
    if config is not None:
        try:
            with open(config, "rb") as handle:
                ctx.obj = tomllib.load(handle)
        except ValueError as exc:
            _fail(f"cannot parse {config}: {exc}")


@main.command("screen")
@click.option("--corpus", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--phrase", default=None, help="Search phrase for the suspect network.")
@click.option("--max-authors", type=int, default=None)
@click.option("--keep-reviewer-only", is_flag=True, default=False)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None)
@click.pass_context
def screen_cmd(ctx, corpus, phrase, max_authors, keep_reviewer_only, out, report_path):
    """Apply the inclusion/exclusion funnel and report per-rule counts."""
    section = _config_section(ctx, "screen")
    try:
        records = _read_corpus(corpus)
        criteria = ScreeningCriteria(
            phrase=_pick(phrase, section.get("phrase"), "Pharmakon Neuroscience"),
            max_authors=int(_pick(max_authors, section.get("max_authors"), 25)),
            exclude_reviewer_only=not keep_reviewer_only,
        )
        included, report = screen(records, criteria)
        Path(out).write_bytes(serialize_corpus(included, "csv"))
        if report_path is not None:
            _write_json(report_path, report.to_json())
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(
        f"screened {report.input_count} records: {report.included_count} included, "
        f"{report.retraction_notice_count} retraction notices, "
        f"{report.doc_type_excluded_count} off-type, "
        f"{report.reviewer_only_count} reviewer-only, "
        f"{report.too_many_authors_count} oversized"
    )


@main.command("resolve")
@click.option("--corpus", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--merges", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--careers", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option(
    "--proposals",
    type=click.Path(path_type=Path),
    default=None,
    help="Write merge proposals (for curation; never auto-applied).",
)
def resolve_cmd(corpus, merges, careers, out, proposals):
    """Consolidate researcher IDs into profiles using the curated merge map."""
    try:
        records = _read_corpus(corpus)
        merge_map = parse_merges(Path(merges).read_bytes()) if merges else None
        career_map = parse_careers(Path(careers).read_bytes()) if careers else None
        profiles = resolve(records, merge_map, career_map)
        Path(out).write_bytes(profiles_to_json(profiles))
        if proposals is not None:
            mentions = [m for r in records for m in r.authors]
            Path(proposals).write_bytes(serialize_merges(propose_merges(mentions)))
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"resolved {len(profiles)} researcher profiles")


@main.command("trust")
@click.option("--corpus", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--registry", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--profiles", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def trust_cmd(corpus, registry, profiles, out):
    """Flag unverified funders, email anomalies, and missing identifiers."""
    try:
        records = _read_corpus(corpus)
        registry_entries = parse_registry(Path(registry).read_bytes())
        profile_list = (
            _load_profiles(profiles) if profiles else resolve(records)
        )
        summary, reports = corpus_trust_summary(records, profile_list, registry_entries)
        payload = {
            "summary": summary.to_json(),
            "reports": [
                {
                    "publication_id": r.publication_id,
                    "severity": r.severity.value,
                    "matched_funders": [
                        {"name": n, "registry_id": rid} for n, rid in r.matched_funders
                    ],
                    "unmatched_funders": list(r.unmatched_funders),
                    "email_anomalies": [
                        {
                            "profile_id": a.profile_id,
                            "variant_key": a.variant_key,
                            "emails": list(a.emails),
                        }
                        for a in r.email_anomalies
                    ],
                    "missing_identifier_profiles": list(r.missing_identifier_profiles),
                }
                for r in reports
            ],
        }
        _write_json(out, payload)
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(
        f"trust markers: {summary.high_severity_publication_count} high-severity "
        f"publications, {summary.missing_identifier_author_count} authors without "
        "persistent identifiers"
    )


@main.command("cluster")
@click.option("--profiles", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--windows", "windows_text", default=None,
              help='Year windows, e.g. "2015-2018,2019-2022,2023-2025".')
@click.option("--linkage", default=None, type=click.Choice(["ward", "complete", "average"]))
@click.option("--kmax", type=int, default=None)
@click.option("--gap-iters", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_context
def cluster_cmd(ctx, profiles, windows_text, linkage, kmax, gap_iters, seed, out):
    """Cluster temporal publication compositions and select k."""
    section = _config_section(ctx, "cluster")
    try:
        profile_list = _load_profiles(profiles)
        windows = PeriodWindows.parse(
            _pick(windows_text, section.get("windows"), "2015-2018,2019-2022,2023-2025")
        )
        config = ClusterConfig(
            linkage=_pick(linkage, section.get("linkage"), "ward"),
            k_min=int(section.get("kmin", 2)),
            k_max=int(_pick(kmax, section.get("kmax"), 15)),
            gap_iterations=int(_pick(gap_iters, section.get("gap_iters"), 100)),
            seed=int(_pick(seed, section.get("seed"), 42)),
        )
        solution = run_pipeline(profile_list, windows, config)
        _write_json(out, solution.to_json())
    except DATA_ERRORS as exc:
        _fail(str(exc))
    sizes = ", ".join(str(c.size) for c in solution.clusters)
    click.echo(
        f"clustered {sum(solution.sizes)} profiles into k={solution.k} "
        f"(sizes {sizes}; silhouette {solution.avg_silhouette:.3f}; "
        f"gap agreement {str(solution.gap_agreement).lower()})"
    )


@main.command("network")
@click.option("--corpus", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--profiles", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--flag-authors-above", type=int, default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--edges", "edges_path", type=click.Path(path_type=Path), default=None)
@click.pass_context
def network_cmd(ctx, corpus, profiles, flag_authors_above, out, edges_path):
    """Build the co-authorship graph and compute its anomaly features."""
    section = _config_section(ctx, "network")
    try:
        records = _read_corpus(corpus)
        profile_list = _load_profiles(profiles)
        threshold = int(
            _pick(flag_authors_above, section.get("flag_authors_above"), 25)
        )
        graph = build_coauthor_graph(records, profile_list)
        stats = citation_stats(records)
        counts = author_count_anomalies(records, threshold=threshold)
        clustering_values = {
            node: local_clustering_coefficient(graph, node)
            for node in sorted(graph.nodes)
        }
        payload = {
            "researchers": len(graph.nodes),
            "coauthorship_links": graph.edge_count,
            "average_clustering": average_clustering(graph),
            "citation_stats": stats.to_json(),
            "author_counts": counts.to_json(),
            "clustering_by_profile": clustering_values,
        }
        _write_json(out, payload)
        if edges_path is not None:
            lines = ["profile_a,profile_b,weight"]
            for (a, b), weight in sorted(graph.edges.items()):
                lines.append(f"{a},{b},{weight}")
            Path(edges_path).write_bytes(("\r\n".join(lines) + "\r\n").encode("utf-8"))
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(
        f"network: {len(graph.nodes)} researchers, {graph.edge_count} co-authorship "
        f"links, mean clustering {payload['average_clustering']:.3f}"
    )


@main.command("funding")
@click.option("--grants", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--rates", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--profiles", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--windows", "windows_text", default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_context
def funding_cmd(ctx, grants, rates, profiles, windows_text, out):
    """Aggregate grant exposure and detect post-window first-time grantees."""
    section = _config_section(ctx, "funding")
    try:
        grant_list = parse_grants(Path(grants).read_bytes())
        rates_table = parse_rates(Path(rates).read_bytes())
        profile_list = _load_profiles(profiles)
        windows = PeriodWindows.parse(
            _pick(windows_text, section.get("windows"), "2015-2018,2019-2022,2023-2025")
        )
        summary = aggregate_funding(grant_list, profile_list, rates_table, windows)
        grantees = new_grantees(summary)
        payload = {
            "summary": summary.to_json(),
            "new_grantees": [
                {
                    "profile_id": g.profile_id,
                    "canonical_name": g.canonical_name,
                    "agencies": list(g.agencies),
                    "countries": list(g.countries),
                    "usd_total": str(g.usd_total),
                }
                for g in grantees
            ],
        }
        _write_json(out, payload)
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(
        f"funding: {summary.funded_researcher_count} funded researchers across "
        f"{len(summary.countries)} countries, USD {summary.usd_equivalent_total} "
        f"equivalent; {len(grantees)} new grantees"
    )


@main.command("report")
@click.option("--corpus", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--profiles", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--solution", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--funding", "funding_path", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--trust", "trust_path", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--screening", "screening_path", type=click.Path(exists=True, path_type=Path),
              default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def report_cmd(corpus, profiles, solution, funding_path, trust_path, screening_path, out):
    """Render the analysis outputs as tables and charts in a directory."""
    try:
        records = _read_corpus(corpus)
        profile_list = _load_profiles(profiles)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[str] = []

        def emit(stem: str, table, formats=("csv", "md", "json")):
            for fmt in formats:
                name = f"{stem}.{fmt}"
                (out_dir / name).write_bytes(render(table, fmt))
                written.append(name)

        emit("publisher_rollup", publisher_rollup(records))
        if solution is not None:
            sol = ClusterSolution.from_json(json.loads(Path(solution).read_text()))
            emit("temporal_archetypes", cluster_report(sol))
        if funding_path is not None:
            payload = json.loads(Path(funding_path).read_text())
            grantees = [
                NewGrantee(
                    profile_id=g["profile_id"],
                    canonical_name=g["canonical_name"],
                    agencies=tuple(g["agencies"]),
                    countries=tuple(g["countries"]),
                    usd_total=Decimal(g["usd_total"]),
                )
                for g in payload.get("new_grantees", ())
            ]
            emit("new_grantees", new_grantee_table(grantees))
        emit(
            "publications_per_year",
            year_counts_table(per_year_counts(records)),
            formats=("csv", "svg"),
        )
        emit(
            "author_countries",
            country_counts(profile_list),
            formats=("csv", "svg"),
        )
        summary: dict = {"files": sorted(written) + ["summary.json"]}
        if screening_path is not None:
            summary["screening"] = json.loads(Path(screening_path).read_text())
        if trust_path is not None:
            summary["trust"] = json.loads(Path(trust_path).read_text())["summary"]
        _write_json(out_dir / "summary.json", summary)
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"report: wrote {len(written) + 1} files to {out_dir}")


@main.command("synth")
@click.option("--spec", "spec_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="TOML synthesis spec (defaults are built in).")
@click.option("--seed", type=int, default=None,
              help="Override the seed from the spec file.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
def synth_cmd(spec_path, seed, out):
    """Generate a synthetic corpus with planted ground truth."""
    try:
        if spec_path is not None:
            with open(spec_path, "rb") as handle:
                spec = SynthSpec.from_dict(tomllib.load(handle))
        else:
            spec = SynthSpec()
        if seed is not None:
            spec = dataclasses.replace(spec, seed=seed)
        result = generate_corpus(spec)
        paths = write_outputs(result, Path(out))
    except DATA_ERRORS as exc:
        _fail(str(exc))
    click.echo(
        f"synthesized {len(result.records)} records, {len(result.grants)} grants "
        f"-> {len(paths)} files in {out}"
    )


if __name__ == "__main__":
    main()
