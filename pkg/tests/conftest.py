import numpy as np
import pytest

from dsharp import distributions as D
from dsharp.sharpening import make_dsharp


BUMP_TRUTH = D.mixture([D.exponential(25.0), D.normal(25.0, 2.5)], [0.9, 0.1])
BUMP_BASE = D.exponential(25.0)
GFR_BASE = D.lognormal(4.0, 0.24)


@pytest.fixture(scope="session")
def bump_data():
    return BUMP_TRUTH.sample(10_000, seed=1).values


@pytest.fixture(scope="session")
def gfr_model():
    return make_dsharp(GFR_BASE, {4: 0.18})


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
