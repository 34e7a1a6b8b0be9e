"""Shared fixtures: hypothesis profile and city-corpus discovery."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

try:
    from hypothesis import HealthCheck, settings

    settings.register_profile(
        "default",
        deadline=None,
        max_examples=60,
        suppress_health_check=[HealthCheck.too_slow],
    )
    settings.load_profile("default")
except ImportError:
    pass

CORPUS_HINT = (
    "Amsterdam corpus not found: set PB_DATA_DIR to a directory of .pb files "
    "or place them under data/amsterdam (source: pabulib.org)."
)

# One line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def corpus_dir() -> Path | None:
    env = os.environ.get("PB_DATA_DIR")
    candidates = []
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "amsterdam")
    for candidate in candidates:
        if candidate.is_dir() and any(candidate.glob("*.pb")):
            return candidate
    return None


@pytest.fixture(scope="session")
def amsterdam_path() -> Path:
    path = corpus_dir()
    if path is None:
        pytest.skip(CORPUS_HINT)
    return path


@pytest.fixture(scope="session")
def amsterdam_corpus(amsterdam_path):
    from pbrules.pabulib import ingest_directory

    return ingest_directory(amsterdam_path)
