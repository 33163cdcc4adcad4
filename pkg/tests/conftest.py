import numpy as np
import pytest

from sinlog.field import CoefficientSchedule, build_potential
from sinlog.quadrature import ExcisionPolicy
from sinlog.sets import FiniteSet, Polyline
from sinlog.solution import Solution

DEFAULT_POINTS = ((0.0, 0.0), (0.02, 0.0), (0.0, 0.02), (-0.02, 0.0))


@pytest.fixture(scope="session")
def default_potential():
    pot, _ = build_potential(FiniteSet(DEFAULT_POINTS),
                             CoefficientSchedule(ratio=0.25), 0.05, 4)
    return pot


@pytest.fixture(scope="session")
def default_solution(default_potential):
    return Solution(default_potential)


@pytest.fixture(scope="session")
def single_log_solution():
    def make(radius=0.05, ratio=0.5):
        pot, _ = build_potential(FiniteSet(((0.0, 0.0),)),
                                 CoefficientSchedule(ratio=ratio), radius, 1)
        return Solution(pot)
    return make


@pytest.fixture(scope="session")
def polyline_potential():
    pot, _ = build_potential(Polyline(((-0.018, -0.009), (0.018, 0.012))),
                             CoefficientSchedule(ratio=0.25), 0.05, 64)
    return pot


@pytest.fixture(scope="session")
def policy():
    return ExcisionPolicy()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240810)


def far_samples(rng, sol, count, margin=1.2e-2):
    """Random points of the domain ball away from the singular set."""
    out = []
    while len(out) < count:
        pts = rng.uniform(-sol.radius, sol.radius, size=(4 * count + 32, 2))
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < sol.radius * 0.96]
        d = np.min(np.hypot(pts[:, None, 0] - sol.points[None, :, 0],
                            pts[:, None, 1] - sol.points[None, :, 1]), axis=1)
        out.extend(pts[d > margin].tolist())
    return np.asarray(out[:count])
