import numpy as np
import pytest

from tailshift.angular import BernsteinWeights
from tailshift.margins import AngularSample

# Canonical J=4 weight vectors used throughout: mass at the edges
# (near tail independence) and mass in the middle (strong dependence).
# Both satisfy the sum and moment constraints exactly.
THETA_EDGES = (0.5, 0.0, 0.5)
THETA_MIDDLE = (0.0, 1.0, 0.0)

_ACCEPTANCE_LINES = []


@pytest.fixture
def theta_edges():
    return BernsteinWeights(4, np.array(THETA_EDGES))


@pytest.fixture
def theta_middle():
    return BernsteinWeights(4, np.array(THETA_MIDDLE))


def make_sample(times, angles, horizon, radii=None, threshold=None, level=None):
    times = np.asarray(times, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if radii is None:
        radii = np.full(len(times), 12.5)
    return AngularSample(
        times=times,
        dates=None,
        angles=angles,
        radii=np.asarray(radii, dtype=float),
        horizon=horizon,
        threshold=threshold,
        level=level,
    )


@pytest.fixture
def sample_builder():
    return make_sample


@pytest.fixture(scope="session")
def criterion_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
