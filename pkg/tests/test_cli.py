from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest


def run_cli(*args, cwd=None, check=True):
    result = subprocess.run(
        [sys.executable, "-m", "papertrail", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
    if check and result.returncode != 0:
        raise AssertionError(
            f"papertrail {' '.join(map(str, args))} failed "
            f"({result.returncode}):\n{result.stderr}"
        )
    return result


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory, fixture_dir):
    """Run the full CLI chain once on the bundled fixture."""
    work = tmp_path_factory.mktemp("pipeline")
    corpus = fixture_dir / "corpus.csv"
    run_cli(
        "screen", "--corpus", corpus, "--out", work / "included.csv",
        "--report", work / "screening.json",
    )
    run_cli(
        "resolve", "--corpus", work / "included.csv",
        "--merges", fixture_dir / "merges.csv",
        "--careers", fixture_dir / "careers.csv",
        "--out", work / "profiles.json",
        "--proposals", work / "proposals.csv",
    )
    run_cli(
        "trust", "--corpus", work / "included.csv",
        "--registry", fixture_dir / "registry.csv",
        "--profiles", work / "profiles.json",
        "--out", work / "trust.json",
    )
    run_cli(
        "cluster", "--profiles", work / "profiles.json",
        "--seed", 42, "--out", work / "solution.json",
    )
    run_cli(
        "network", "--corpus", work / "included.csv",
        "--profiles", work / "profiles.json",
        "--out", work / "network.json", "--edges", work / "edges.csv",
    )
    run_cli(
        "funding", "--grants", fixture_dir / "grants.csv",
        "--rates", fixture_dir / "rates.csv",
        "--profiles", work / "profiles.json",
        "--out", work / "funding.json",
    )
    run_cli(
        "report", "--corpus", work / "included.csv",
        "--profiles", work / "profiles.json",
        "--solution", work / "solution.json",
        "--funding", work / "funding.json",
        "--trust", work / "trust.json",
        "--screening", work / "screening.json",
        "--out", work / "report",
    )
    return work


def test_screen_report_counts(pipeline_dir):
    report = json.loads((pipeline_dir / "screening.json").read_text())
    assert report == {
        "input_count": 140,
        "retraction_notice_count": 2,
        "doc_type_excluded_count": 12,
        "reviewer_only_count": 4,
        "too_many_authors_count": 2,
        "included_count": 120,
    }


def test_resolve_output(pipeline_dir):
    payload = json.loads((pipeline_dir / "profiles.json").read_text())
    assert len(payload["profiles"]) == 312
    proposals = (pipeline_dir / "proposals.csv").read_text()
    assert proposals.count("\n") > 7  # header + at least the planted pairs


def test_trust_output(pipeline_dir):
    payload = json.loads((pipeline_dir / "trust.json").read_text())
    assert payload["summary"]["missing_identifier_author_count"] == 29
    names = {e["name"] for e in payload["summary"]["unmatched_funder_names"]}
    assert "Pharmakon Neuroscience Research Network" in names


def test_cluster_output(pipeline_dir):
    payload = json.loads((pipeline_dir / "solution.json").read_text())
    assert payload["k"] == 4
    assert sorted((c["size"] for c in payload["clusters"]), reverse=True) == [
        202, 68, 24, 18,
    ]


def test_network_output(pipeline_dir):
    payload = json.loads((pipeline_dir / "network.json").read_text())
    assert payload["researchers"] == 312
    assert payload["coauthorship_links"] > 0
    edges = (pipeline_dir / "edges.csv").read_text().splitlines()
    assert edges[0] == "profile_a,profile_b,weight"
    assert len(edges) - 1 == payload["coauthorship_links"]


def test_funding_output(pipeline_dir):
    payload = json.loads((pipeline_dir / "funding.json").read_text())
    assert payload["summary"]["funded_researcher_count"] == 30
    assert len(payload["new_grantees"]) == 9


def test_report_directory_contents(pipeline_dir):
    report = pipeline_dir / "report"
    expected = {
        "publisher_rollup.csv",
        "publisher_rollup.md",
        "publisher_rollup.json",
        "temporal_archetypes.csv",
        "temporal_archetypes.md",
        "temporal_archetypes.json",
        "new_grantees.csv",
        "new_grantees.md",
        "new_grantees.json",
        "publications_per_year.csv",
        "publications_per_year.svg",
        "author_countries.csv",
        "author_countries.svg",
        "summary.json",
    }
    assert {p.name for p in report.iterdir()} == expected
    summary = json.loads((report / "summary.json").read_text())
    assert summary["screening"]["included_count"] == 120
    assert summary["trust"]["missing_identifier_author_count"] == 29


def test_trust_without_profiles_resolves_internally(tmp_path, fixture_dir, pipeline_dir):
    run_cli(
        "trust", "--corpus", pipeline_dir / "included.csv",
        "--registry", fixture_dir / "registry.csv",
        "--out", tmp_path / "trust.json",
    )
    payload = json.loads((tmp_path / "trust.json").read_text())
    assert payload["summary"]["missing_identifier_author_count"] == 29


def test_synth_command_writes_all_inputs(tmp_path):
    result = run_cli("synth", "--out", tmp_path / "synth")
    assert "140 records" in result.stdout
    names = {p.name for p in (tmp_path / "synth").iterdir()}
    assert names == {
        "corpus.csv", "grants.csv", "rates.csv", "registry.csv",
        "merges.csv", "careers.csv", "truth.json",
    }


def test_synth_spec_file_and_seed_override(tmp_path):
    spec = tmp_path / "spec.toml"
    spec.write_text(
        """
seed = 5
included_papers = 30
merge_pairs = 1
no_identifier_authors = 2
email_variant_authors = 1
funded_researchers = 4
new_grantees = 1

[[archetype]]
name = "steady"
centroid = [0.25, 0.5, 0.25]
authors = 18
pubs = [30, 60]

[[archetype]]
name = "burst"
centroid = [0.0, 1.0, 0.0]
authors = 6
pubs = [8, 14]

[decoys]
retraction_notices = 1
doc_type_excluded = 2
reviewer_only = 0
oversized_author_counts = [40]
"""
    )
    run_cli("synth", "--spec", spec, "--seed", 6, "--out", tmp_path / "a")
    run_cli("synth", "--spec", spec, "--seed", 6, "--out", tmp_path / "b")
    run_cli("synth", "--spec", spec, "--out", tmp_path / "c")
    a = (tmp_path / "a" / "corpus.csv").read_bytes()
    assert a == (tmp_path / "b" / "corpus.csv").read_bytes()
    assert a != (tmp_path / "c" / "corpus.csv").read_bytes()
    truth = json.loads((tmp_path / "a" / "truth.json").read_text())
    assert truth["seed"] == 6


def test_config_file_overrides_defaults(tmp_path, fixture_dir):
    config = tmp_path / "papertrail.toml"
    config.write_text('[screen]\nmax_authors = 200\n')
    run_cli(
        "--config", config, "screen",
        "--corpus", fixture_dir / "corpus.csv",
        "--out", tmp_path / "included.csv",
        "--report", tmp_path / "report.json",
    )
    report = json.loads((tmp_path / "report.json").read_text())
    # The 63-author decoy now passes; the 161-author one still fails.
    assert report["too_many_authors_count"] == 0
    assert report["included_count"] == 122


def test_flag_overrides_config(tmp_path, fixture_dir):
    config = tmp_path / "papertrail.toml"
    config.write_text('[screen]\nmax_authors = 200\n')
    run_cli(
        "--config", config, "screen",
        "--corpus", fixture_dir / "corpus.csv",
        "--max-authors", 25,
        "--out", tmp_path / "included.csv",
        "--report", tmp_path / "report.json",
    )
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["too_many_authors_count"] == 2


def test_usage_error_exits_2():
    result = run_cli("screen", check=False)  # missing required options
    assert result.returncode == 2


def test_data_error_exits_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("publication_id,title\nx,y\n")
    result = run_cli(
        "screen", "--corpus", bad, "--out", tmp_path / "o.csv", check=False
    )
    assert result.returncode == 1
    assert "missing column" in result.stderr


def test_version_flag():
    result = run_cli("--version")
    assert "papertrail" in result.stdout
