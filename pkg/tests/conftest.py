import numpy as np
import pytest

from cosetgauge.coset import CosetChart
from cosetgauge.lie import HRepresentation, ReductiveSplit, so3, so4, su2

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])

# Lines printed by the acceptance suite, collected here and shown in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def so3_chart():
    alg = so3()
    return CosetChart(alg, ReductiveSplit.from_h(3, [2]), HRepresentation(ROT[None]))


@pytest.fixture(scope="session")
def su2_chart():
    alg = su2()
    return CosetChart(alg, ReductiveSplit.from_h(3, [2]), HRepresentation(0.5 * ROT[None]))


@pytest.fixture(scope="session")
def so4_chart():
    alg = so4()
    return CosetChart(alg, ReductiveSplit.from_h(6, [0, 1, 2]), HRepresentation(alg.matrices[:3, :3, :3]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
