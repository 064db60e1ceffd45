from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from papertrail.clustering import run_pipeline
from papertrail.resolution import resolve
from papertrail.screening import screen
from papertrail.synth import generate_corpus

FIXTURE_DIR = Path(__file__).parent / "data" / "fixture-default"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def synth_result():
    return generate_corpus()


@pytest.fixture(scope="session")
def screened(synth_result):
    return screen(synth_result.records)


@pytest.fixture(scope="session")
def profiles(synth_result, screened):
    included, _ = screened
    return resolve(included, synth_result.merge_map, synth_result.careers)


@pytest.fixture(scope="session")
def solution(profiles):
    return run_pipeline(profiles)
