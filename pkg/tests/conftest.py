import numpy as np
import pytest

from parlame.geometry import CylinderDomain, face, make_box
from parlame.kernels import LameCoefficients

COEFF_SETS = [LameCoefficients(1.0, -1.0), LameCoefficients(1.0, 0.0), LameCoefficients(2.0, 0.5)]


@pytest.fixture
def unit_square():
    return CylinderDomain(make_box([[0.0, 1.0], [0.0, 1.0]]), 1.0)


@pytest.fixture
def bottom_face(unit_square):
    return face(unit_square, 1, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
