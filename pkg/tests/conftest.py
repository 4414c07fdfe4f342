import functools

import numpy as np
import pytest

from entropy_homogenizer import casebook
from entropy_homogenizer.channel import uniform_rows_channel
from entropy_homogenizer.density import Grid

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def case_run(name, sigma=None, n=1000, n_star=None):
    """Shared pipeline for a built-in case; stages are computed on first use."""
    return casebook.CaseRun(casebook.get_case(name, sigma), n_e=n, n_q=n, n_star=n_star)


@pytest.fixture(scope="session")
def run_case():
    return case_run


@pytest.fixture
def fig3_channel():
    g = Grid(0.0, 1.0, 200)
    return uniform_rows_channel(g, g, lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
