from __future__ import annotations

from pathlib import Path

import pytest

from stagespread.config import canonical_params, load_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# Filled by test_acceptance.py, echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def canonical():
    return canonical_params()


@pytest.fixture(scope="session")
def seasonal():
    return load_params(CONFIGS / "seasonal.json")


@pytest.fixture(scope="session")
def config_dir():
    return CONFIGS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
