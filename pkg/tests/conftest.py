import numpy as np
import pytest

from twistfluct.fixtures import four_point, two_point
from twistfluct.manifold import lattice_minimal_twist

from _support import ACCEPTANCE_LINES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tp():
    return two_point()


@pytest.fixture(scope="session")
def fp():
    return four_point()


@pytest.fixture(scope="session")
def fp_untwisted():
    return four_point(twisted=False)


@pytest.fixture(scope="session")
def lat1():
    return lattice_minimal_twist(1, 9)


@pytest.fixture(scope="session")
def lat2():
    return lattice_minimal_twist(2, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
