import numpy as np
import pytest

from barycentric_ot.dual import (
    MaxAffineFunction,
    build_dual_potential,
    certificate,
    conjugate_at,
    dual_value,
    duality_gap,
    h_value,
    is_certified,
    phi_value,
    prox_point,
    q2_at,
)
from barycentric_ot.errors import NotConverged
from barycentric_ot.measures import dirac
from barycentric_ot.wot import solve_barycentric

from conftest import measure, random_pair


def candidates_1d(f, x):
    """Every point where y -> f(y) + (y - x)^2 can attain its minimum on the line.

    Inside a piece the minimiser is the stationary point; otherwise it sits at
    a kink, which is among the pairwise intersections of the pieces.
    """
    a, c = f.slopes[:, 0], f.offsets
    pts = list(x - a / 2.0)
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if a[i] != a[j]:
                pts.append((c[j] - c[i]) / (a[i] - a[j]))
    return np.array(pts)


def grid_conjugate(g, z, lo=-50.0, hi=50.0, n=200001):
    y = np.linspace(lo, hi, n)
    return float(np.max(z * y - g(y[:, None])))


def test_conjugate_examples():
    g = MaxAffineFunction([[0.0], [1.0]], [0.0, -1.0])  # max(0, y - 1)
    assert np.isclose(conjugate_at(g, [0.5]), 0.5)
    assert np.isclose(conjugate_at(g, [0.5]), grid_conjugate(g, 0.5), atol=1e-6)
    assert conjugate_at(g, [2.0]) == np.inf
    single = MaxAffineFunction([[0.7]], [2.5])
    assert np.isclose(conjugate_at(single, [0.7]), -2.5)


@pytest.mark.parametrize("seed", range(10))
def test_conjugate_against_grid(seed):
    rng = np.random.default_rng(seed)
    g = MaxAffineFunction(rng.uniform(-2, 2, size=(4, 1)), rng.normal(size=4))
    lo, hi = g.slopes.min(), g.slopes.max()
    z = rng.uniform(lo, hi)
    assert abs(conjugate_at(g, [z]) - grid_conjugate(g, z)) <= 1e-3


def test_biconjugate_on_slopes():
    # g** = g for polyhedral g; check through the slopes: g*(a_k) <= -c_k with equality on active pieces
    rng = np.random.default_rng(4)
    g = MaxAffineFunction(rng.normal(size=(5, 2)), rng.normal(size=5))
    for a, c in zip(g.slopes, g.offsets):
        assert conjugate_at(g, a) <= -c + 1e-9
    y = rng.normal(size=2)
    k = g.active_piece(y)
    assert np.isclose(g.slopes[k] @ y - conjugate_at(g, g.slopes[k]), g(y))


def test_q2_zero_function():
    f = MaxAffineFunction([[0.0, 0.0]], [0.0])
    for x in ([0.0, 0.0], [1.0, -2.0]):
        assert abs(q2_at(f, x)) <= 1e-14


@pytest.mark.parametrize("seed", range(10))
def test_q2_against_exact_enumeration(seed):
    rng = np.random.default_rng(seed)
    f = MaxAffineFunction(rng.uniform(-3, 3, size=(3, 1)), rng.normal(size=3))
    x = rng.normal()
    y = candidates_1d(f, x)
    vals = f(y[:, None]) + (y - x) ** 2
    assert abs(q2_at(f, [x]) - vals.min()) <= 1e-10
    assert abs(prox_point(f, [x])[0] - y[np.argmin(vals)]) <= 1e-8


def test_phi_is_conjugate_of_h():
    # h*(x) = sup_y x y - (f(y) + y^2) / 2 = (x^2 - Q2f(x)) / 2, attained at the prox point
    rng = np.random.default_rng(1)
    f = MaxAffineFunction(rng.normal(size=(3, 1)), rng.normal(size=3))
    for x in (-0.7, 0.0, 1.3):
        y = candidates_1d(f, x)
        exact = np.max(x * y - h_value(f, y[:, None]))
        assert abs(phi_value(f, [x]) - exact) <= 1e-10
        grid = np.linspace(-30, 30, 600001)
        assert np.max(x * grid - h_value(f, grid[:, None])) <= exact + 1e-12


def test_two_atom_certificate(two_atom):
    mu, nu = two_atom
    sol = solve_barycentric(mu, nu)
    f = build_dual_potential(sol)
    gap = duality_gap(sol, f)
    assert -1e-8 <= gap <= 1e-6
    # the prox point of each atom is its barycenter
    for x, b in zip(mu.points, sol.barycenters):
        assert np.allclose(prox_point(f, x), b, atol=1e-9)


def test_equal_and_dirac_instances():
    m = measure([0.0, 1.0])
    sol = solve_barycentric(m, m)
    assert abs(duality_gap(sol, build_dual_potential(sol))) <= 1e-8
    sol = solve_barycentric(dirac([0.5]), measure([-1.0, 1.0]))
    assert abs(duality_gap(sol, build_dual_potential(sol))) <= 1e-8


@pytest.mark.parametrize("seed", range(30))
def test_gap_small_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_pair(rng)
    sol = solve_barycentric(mu, nu)
    f = build_dual_potential(sol)
    gap = duality_gap(sol, f)
    assert -1e-8 <= gap and is_certified(sol, gap)
    # shifting f by a constant leaves the dual value unchanged
    shifted = MaxAffineFunction(f.slopes, f.offsets + 3.7)
    assert abs(dual_value(mu, nu, shifted) - dual_value(mu, nu, f)) <= 1e-9 * (1 + abs(sol.value))


@pytest.mark.parametrize("seed", range(20))
def test_weak_duality_for_random_functions(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_pair(rng)
    value = solve_barycentric(mu, nu).value
    k = int(rng.integers(1, 5))
    f = MaxAffineFunction(3.0 * rng.normal(size=(k, mu.dim)), rng.normal(size=k))
    assert dual_value(mu, nu, f) <= value + 1e-8


def test_certificate_payload(two_atom):
    sol = solve_barycentric(*two_atom)
    cert = certificate(sol)
    assert set(cert) >= {"pieces", "q2_at_mu_atoms", "gap", "certified"}
    assert cert["certified"]


def test_requires_converged():
    import warnings

    mu, nu = random_pair(np.random.default_rng(3), d=2, n=4, m=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_barycentric(mu, nu, method="plain", max_iters=1, tol=1e-14)
    assert not sol.converged
    with pytest.raises(NotConverged):
        build_dual_potential(sol)
