import numpy as np
import pytest
from hypothesis import settings

from bohmfluid.fields import Grid1D

settings.register_profile("repo", deadline=None, max_examples=30, derandomize=True)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid():
    return Grid1D(128, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
