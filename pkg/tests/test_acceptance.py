"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary.  The module can also be executed directly.
"""

import json
import math
import time

import numpy as np
import pytest

from barycentric_ot.analysis import (
    check_c2_monotonicity,
    check_equality_w2_t2,
    check_map_regularity,
    check_submartingale_1d,
)
from barycentric_ot.cli import main as cli_main
from barycentric_ot.costs import brute_force_weak_cost, c_lambda, solve_lambda
from barycentric_ot.dual import build_dual_potential, duality_gap
from barycentric_ot.linprog import transport_scale, w2_squared
from barycentric_ot.measures import pushforward, to_csv, validate_measure
from barycentric_ot.order import check_convex_order, check_icx_order_1d
from barycentric_ot.simplex import SimplexInstance, simplex_projection_measure
from barycentric_ot.wot import extract_projection, product_plan, solve_barycentric

RESULTS = []


def report(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert passed, line


def uniform(points):
    points = np.asarray(points, dtype=float).reshape(len(points), -1)
    return validate_measure(points, np.full(points.shape[0], 1.0 / points.shape[0]))


_CACHE = {}


def random_instances():
    """50 instances: seed 0, d in {1, 2, 3}, n, m <= 4, Dirichlet weights."""
    if "instances" not in _CACHE:
        rng = np.random.default_rng(0)
        out = []
        for _ in range(50):
            d = int(rng.integers(1, 4))
            n, m = (int(k) for k in rng.integers(1, 5, 2))
            mu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
            nu = validate_measure(2.0 * rng.normal(size=(m, d)), rng.dirichlet(np.ones(m)))
            out.append((mu, nu))
        _CACHE["instances"] = out
    return _CACHE["instances"]


def solutions():
    if "solutions" not in _CACHE:
        _CACHE["solutions"] = [solve_barycentric(mu, nu) for mu, nu in random_instances()]
    return _CACHE["solutions"]


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for (mu, nu), sol in zip(random_instances(), solutions()):
        oracle = brute_force_weak_cost(mu, nu)
        worst = max(worst, abs(sol.value - oracle.value) / (1.0 + sol.value))
    elapsed = time.perf_counter() - t0
    report(1, "Frank-Wolfe matches the brute-force oracle", worst <= 1e-5 and elapsed < 30.0,
           f"worst relative gap {worst:.2e} <= 1e-5, {elapsed:.1f} s < 30 s")


def test_criterion_02_closed_form():
    mu, nu = uniform([0.0, 1.0]), uniform([0.0, 2.0])
    sol = solve_barycentric(mu, nu)
    proj = extract_projection(sol).measure
    w2 = w2_squared(mu, nu)[0]
    err = max(
        abs(sol.value - 0.25),
        np.abs(sol.barycenters[:, 0] - [0.5, 1.5]).max(),
        np.abs(proj.points[:, 0] - [0.5, 1.5]).max(),
        np.abs(proj.weights - 0.5).max(),
        abs(w2 - 0.5),
    )
    report(2, "closed-form two-atom instance", err <= 1e-6, f"max error {err:.2e} <= 1e-6")


def test_criterion_03_duality_certificate():
    worst = 0.0
    for sol in solutions():
        gap = duality_gap(sol, build_dual_potential(sol))
        worst = max(worst, gap / (1.0 + sol.value))
    report(3, "duality gap of the dual potential", worst <= 1e-6, f"worst gap/(1+value) {worst:.2e} <= 1e-6")


def test_criterion_04_projection_identity():
    worst, dominated = 0.0, True
    for (mu, nu), sol in zip(random_instances(), solutions()):
        bar = extract_projection(sol).measure
        worst = max(worst, abs(sol.value - w2_squared(mu, bar)[0]) / (1.0 + sol.value))
        dominated &= check_convex_order(bar, nu).holds
    report(4, "value equals W2^2(mu, mu_bar) and mu_bar is dominated by nu", worst <= 1e-6 and dominated,
           f"worst relative difference {worst:.2e} <= 1e-6, all dominated: {dominated}")


def test_criterion_05_uniqueness():
    worst = 0.0
    for k, ((mu, nu), sol) in enumerate(zip(random_instances(), solutions())):
        other = solve_barycentric(mu, nu, start="vertex", seed=k)
        worst = max(worst, float(mu.weights @ ((sol.barycenters - other.barycenters) ** 2).sum(axis=1)))
    report(5, "barycenter map unique across starts", worst <= 1e-8, f"worst sum mu|b - b'|^2 {worst:.2e} <= 1e-8")


def test_criterion_06_regularity_and_monotonicity():
    worst, ok = -math.inf, True
    for (mu, nu), sol in zip(random_instances(), solutions()):
        assert sol.converged
        tol = 1e-6 * transport_scale(mu, nu)
        c2 = check_c2_monotonicity(sol.plan, tol)
        reg = check_map_regularity(mu.points, sol.barycenters, mu.weights, tol)
        ok &= c2.passed and reg.passed
        worst = max(worst, c2.worst_violation / tol, reg.worst_violation / tol)
    report(6, "map regularity and c2-monotonicity", ok, f"worst violation/tol {worst:.2e} <= 1")


def _psd(rng, d, norm):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    eig = rng.uniform(0.0, 1.0, size=d)
    eig *= norm / eig.max()
    return Q @ np.diag(eig) @ Q.T


def test_criterion_07_w2_equals_t2_for_contractions():
    rng = np.random.default_rng(7)
    contraction_ok, worst_dist = 0, 0.0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        A, c = _psd(rng, d, rng.uniform(0.05, 1.0)), rng.normal(size=d)
        n = int(rng.integers(2, 7))
        mu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
        rep = check_equality_w2_t2(mu, pushforward(mu, lambda x: x @ A.T + c))
        if rep.passed and rep.w2_mu_bar_nu <= 1e-4:
            contraction_ok += 1
            worst_dist = max(worst_dist, rep.w2_mu_bar_nu)
    expanding_fail = 0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        A, c = _psd(rng, d, rng.uniform(1.5, 3.0)), rng.normal(size=d)
        mu = validate_measure(rng.normal(size=(6, d)), rng.dirichlet(np.ones(6)))
        rep = check_equality_w2_t2(mu, pushforward(mu, lambda x: x @ A.T + c))
        expanding_fail += (not rep.passed) and rep.w2_squared - rep.t2 > rep.report.tol
    report(7, "W2^2 = T2 exactly for contraction gradients", contraction_ok == 20 and expanding_fail >= 18,
           f"{contraction_ok}/20 contractions pass (max W2(mu_bar, nu) {worst_dist:.1e}), "
           f"{expanding_fail}/20 expansions fail")


def test_criterion_08_submartingale():
    rng = np.random.default_rng(8)
    passed, tried = 0, 0
    while tried < 20:
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        mu = validate_measure(rng.normal(size=(n, 1)), rng.dirichlet(np.ones(n)))
        nu = validate_measure(rng.normal(loc=rng.uniform(0, 1.5), scale=rng.uniform(1, 2.5), size=(m, 1)),
                              rng.dirichlet(np.ones(m)))
        if not check_icx_order_1d(mu, nu).holds:
            continue
        tried += 1
        passed += check_submartingale_1d(mu, nu).passed
    x, y = np.linspace(-1.0, 0.0, 11), np.linspace(0.0, 3.0, 31)
    sol = solve_barycentric(uniform(x), uniform(y))
    drift = float(np.abs(sol.barycenters[:, 0] - (x + 2.0)).max())
    fixture_ok = drift <= 0.1 and check_submartingale_1d(uniform(x), uniform(y), sol).passed
    report(8, "submartingale structure under increasing convex order", passed == 20 and fixture_ok,
           f"{passed}/20 icx pairs pass, translation fixture max|b - (x + 2)| {drift:.1e} <= 0.1")


def test_criterion_09_simplex_closed_form():
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    worst_value, worst_w2 = 0.0, 0.0
    for _ in range(10):
        inst = SimplexInstance(2.0 * rng.normal(size=(3, 2)), rng.dirichlet(2.0 * np.ones(3)))
        k = int(rng.integers(2, 21))
        mu = validate_measure(2.0 * rng.normal(size=(k, 2)), rng.dirichlet(np.ones(k)))
        res = simplex_projection_measure(mu, inst)
        sol = solve_barycentric(mu, inst.measure())
        worst_value = max(worst_value, abs(res.value - sol.value) / (1.0 + sol.value))
        dist = math.sqrt(max(w2_squared(res.projection.measure, extract_projection(sol).measure)[0], 0.0))
        worst_w2 = max(worst_w2, dist)
    elapsed = time.perf_counter() - t0
    report(9, "simplex closed form agrees with the generic solver",
           worst_value <= 1e-4 and worst_w2 <= 1e-3 and elapsed < 10.0,
           f"value {worst_value:.1e} <= 1e-4, W2 {worst_w2:.1e} <= 1e-3, {elapsed:.1f} s < 10 s")


def test_criterion_10_lambda_reduction():
    rng = np.random.default_rng(10)
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        for _ in range(10):
            d, n, m = (int(k) for k in (rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4)))
            mu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
            nu = validate_measure(rng.normal(size=(m, d)), rng.dirichlet(np.ones(m)))
            direct = brute_force_weak_cost(mu, nu, c_lambda(lam)).value
            worst = max(worst, abs(solve_lambda(mu, nu, lam, tol=1e-12).value - direct))
    worst_plan = 0.0
    # a 3 x 3 product optimum is unique only when the target atoms are affinely independent
    for n, d in ((2, 1), (3, 2)):
        for _ in range(5):
            mu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
            nu = validate_measure(rng.normal(size=(n, d)), rng.dirichlet(np.ones(n)))
            plan = brute_force_weak_cost(mu, nu, c_lambda(0.0)).plan
            worst_plan = max(worst_plan, float(np.linalg.norm(plan - product_plan(mu, nu))))
    report(10, "c_lambda reduction identity and product optimum at lambda = 0",
           worst <= 1e-5 and worst_plan <= 1e-6,
           f"identity error {worst:.1e} <= 1e-5, Frobenius distance {worst_plan:.1e} <= 1e-6")


def test_criterion_11_strassen_completion(tmp_path, capsys):
    worst_marg, worst_bary, codes = 0.0, 0.0, set()
    for k, (mu, nu) in enumerate(random_instances()):
        pm, pn, out = tmp_path / f"mu{k}.csv", tmp_path / f"nu{k}.csv", tmp_path / f"out{k}.json"
        pm.write_text(to_csv(mu))
        pn.write_text(to_csv(nu))
        codes.add(cli_main(["project", "--mu", str(pm), "--nu", str(pn), "--out", str(out)]))
        chain = json.loads(out.read_text())["chain"]
        worst_marg = max(worst_marg, chain["marginal_residual"])
        worst_bary = max(worst_bary, chain["barycenter_residual"])
    capsys.readouterr()
    report(11, "composed chain from 'project' is a coupling realising the map",
           codes == {0} and worst_marg <= 1e-9 and worst_bary <= 1e-6,
           f"marginals {worst_marg:.1e} <= 1e-9, barycenters {worst_bary:.1e} <= 1e-6, exit codes {sorted(codes)}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
