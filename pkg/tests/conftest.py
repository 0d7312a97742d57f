import numpy as np
import pytest

from barycentric_ot.measures import validate_measure


def measure(points, weights=None):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if weights is None:
        weights = np.full(points.shape[0], 1.0 / points.shape[0])
    return validate_measure(points, weights)


def random_pair(rng, d=None, n=None, m=None, spread=2.0):
    """Random instance in the style of the acceptance suite: Dirichlet weights, n, m <= 4."""
    d = int(rng.integers(1, 4)) if d is None else d
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    mu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
    nu = validate_measure(spread * rng.normal(size=(m, d)), rng.dirichlet(np.ones(m)))
    return mu, nu


@pytest.fixture
def two_atom():
    return measure([0.0, 1.0]), measure([0.0, 2.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
