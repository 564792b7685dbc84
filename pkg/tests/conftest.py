"""Shared fixtures and the acceptance-criteria report hook."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

# One deterministic profile for the whole suite: property tests must not
# flake across machines, and every module under test is itself seeded.
settings.register_profile("suite", deadline=None, derandomize=True,
                          max_examples=40)
settings.load_profile("suite")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report() -> list[str]:
    """Collector the acceptance tests append their pass/fail lines to."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
