import math

import pytest

from poisson_pinsker import model as M

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run slow Monte Carlo checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rc():
    return M.raised_cosine(S=5.0, tau=1.0)


@pytest.fixture(scope="session")
def rc_Q(rc):
    return M.sobolev_functional(rc.theta, 2, rc.tau)


@pytest.fixture(scope="session")
def negative_model():
    # theta_1 > 0: lambda = a sin u + 3 b sin 3u with a < 0 goes negative
    a, b = -1.0, 2.0
    r = math.sqrt(0.5)
    return M.IntensityModel(tau=1.0, theta=[a + b, -a * r, 0.0, -b * r])
