import numpy as np
import pytest

from barycentric_ot.errors import BarycenterOnBoundary, DegenerateSimplex, DimensionMismatch
from barycentric_ot.linprog import w2_squared
from barycentric_ot.measures import dirac, validate_measure
from barycentric_ot.simplex import (
    SimplexInstance,
    barycenter_mismatch,
    find_translation,
    kkt_residual,
    phi,
    project_to_simplex,
    simplex_projection_measure,
    transport_map,
)
from barycentric_ot.wot import extract_projection, solve_barycentric

from conftest import measure

TRI = SimplexInstance([[0, 0], [1, 0], [0, 1]], [1 / 3, 1 / 3, 1 / 3])


@pytest.mark.parametrize(
    "z, expected",
    [([2.0, 0.0], [1.0, 0.0]), ([1.0, 1.0], [0.5, 0.5]), ([0.2, 0.3], [0.2, 0.3]), ([-1.0, -1.0], [0.0, 0.0])],
)
def test_projection_examples(z, expected):
    p, lam = project_to_simplex(z, TRI)
    assert np.allclose(p, expected, atol=1e-12)
    assert lam.min() >= 0 and np.isclose(lam.sum(), 1.0)
    assert kkt_residual(z, TRI, lam) <= 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_projection_unique_from_any_start(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(4, 3))
    inst = SimplexInstance(V, np.full(4, 0.25))
    z = 2 * rng.normal(size=3)
    p1, l1 = project_to_simplex(z, inst)
    p2, l2 = project_to_simplex(z, inst, start=rng.dirichlet(np.ones(4)))
    assert np.abs(l1 - l2).max() <= 1e-9
    # optimality by sampling: no point of the simplex is closer
    samples = rng.dirichlet(np.ones(4), size=2000) @ V
    assert np.linalg.norm(z - p1) <= np.linalg.norm(samples - z, axis=1).min() + 1e-12


def test_degenerate_simplex():
    with pytest.raises(DegenerateSimplex):
        SimplexInstance([[0, 0], [1, 1], [2, 2]], [1 / 3, 1 / 3, 1 / 3])
    with pytest.raises(DegenerateSimplex):
        SimplexInstance([[0.0], [1.0], [2.0]], [1 / 3, 1 / 3, 1 / 3])


def test_barycenter_on_boundary():
    inst = SimplexInstance([[0, 0], [1, 0], [0, 1]], [0.5, 0.5, 0.0])
    with pytest.raises(BarycenterOnBoundary):
        find_translation(measure([[0.0, 0.0]]), inst)


def test_dimension_checked():
    with pytest.raises(DimensionMismatch):
        find_translation(measure([0.0, 1.0]), TRI)


def test_one_dimensional_example():
    inst = SimplexInstance([[0.0], [2.0]], [0.5, 0.5])
    mu = measure([-2.0, 4.0])
    v = find_translation(mu, inst)
    assert np.allclose(v, 0.0, atol=1e-8)
    res = simplex_projection_measure(mu, inst)
    assert np.isclose(res.value, 4.0)
    assert np.allclose(res.projection.measure.points[:, 0], [0.0, 2.0])
    assert abs(solve_barycentric(mu, inst.measure()).value - res.value) <= 1e-4


def test_dirac_source():
    mu = dirac([10.0, 10.0])
    res = simplex_projection_measure(mu, TRI)
    assert res.projection.measure.n == 1
    assert np.allclose(res.projection.measure.points[0], [1 / 3, 1 / 3], atol=1e-8)
    assert barycenter_mismatch(mu, TRI, res.translation) <= 1e-8


def test_symmetric_source_needs_no_translation():
    c = np.array([1 / 3, 1 / 3])
    mu = measure(c + np.array([[2.0, 0.0], [-1.0, 1.7320508075688772], [-1.0, -1.7320508075688772]]))
    # equilateral version of the triangle so that rotations are symmetries
    inst = SimplexInstance(c + np.array([[1.0, 0.0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]),
                           [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(find_translation(mu, inst), 0.0, atol=1e-8)


def test_phi_gradient_is_map():
    rng = np.random.default_rng(0)
    v = rng.normal(size=2)
    for x in rng.normal(size=(5, 2)) * 2:
        h = 1e-5
        g = np.array([(phi(x + h * e, v, TRI) - phi(x - h * e, v, TRI)) / (2 * h) for e in np.eye(2)])
        assert np.allclose(g, transport_map(x, v, TRI), atol=1e-5)


@pytest.mark.parametrize("seed", range(8))
def test_agrees_with_generic_solver(seed):
    rng = np.random.default_rng(seed)
    inst = SimplexInstance(rng.normal(size=(3, 2)) * 2, rng.dirichlet(np.ones(3) * 2))
    k = int(rng.integers(2, 12))
    mu = validate_measure(rng.normal(size=(k, 2)) * 2, rng.dirichlet(np.ones(k)))
    res = simplex_projection_measure(mu, inst)
    sol = solve_barycentric(mu, inst.measure())
    assert abs(res.value - sol.value) <= 1e-4 * (1 + sol.value)
    assert np.sqrt(w2_squared(res.projection.measure, extract_projection(sol).measure)[0]) <= 1e-3
    images = res.projection.map_points
    for i in range(k):
        for j in range(i + 1, k):
            assert np.linalg.norm(images[i] - images[j]) <= np.linalg.norm(mu.points[i] - mu.points[j]) + 1e-12


def test_positive_codimension_segment():
    inst = SimplexInstance([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]], [0.3, 0.7])
    rng = np.random.default_rng(1)
    mu = validate_measure(rng.normal(size=(6, 3)), rng.dirichlet(np.ones(6)))
    res = simplex_projection_measure(mu, inst)
    sol = solve_barycentric(mu, inst.measure())
    assert abs(res.value - sol.value) <= 1e-4 * (1 + sol.value)
