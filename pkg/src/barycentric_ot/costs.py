"""The ``c_lambda`` family of weak costs and a brute-force weak-cost oracle.

``c_lambda(x, p) = (lambda - 1) int |y - x|^2 dp(y) + |int y dp(y) - x|^2``

For ``lambda > 0`` the associated transport cost reduces to the barycentric
quadratic cost after scaling ``mu`` by ``lambda``:

    T_{c_lambda}(nu | mu) = C(lambda) + T2bar(nu | lambda mu),
    C(lambda) = -lambda (lambda - 1) M2(mu) + (lambda - 1) M2(nu).

For ``lambda = 0`` the cost is minus the variance of the kernel and the
product coupling is optimal.

The oracle :func:`brute_force_weak_cost` minimises any kernel-convex weak
cost with a general-purpose constrained solver from many starts (including
every vertex on tiny problems).  It shares no code with the Frank-Wolfe solver
and is meant for desk-scale cross-checks only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NegativeLambda, TooLarge
from .linprog import TransportPlan, solve_transport
from .measures import DiscreteMeasure, scale, second_moment
from .wot import product_plan, solve_barycentric

MAX_ORACLE_SIZE = 64


@dataclass(frozen=True)
class WeakCost:
    """A cost ``c(x, p)`` of a point and a kernel row over the atoms ``ys``.

    ``value(x, p, ys)`` returns a float; ``grad(x, p, ys)`` its gradient in
    ``p``.  When ``grad`` is None central differences are used.  ``rows`` and
    ``row_grads``, if given, evaluate all rows at once: ``rows(X, K, ys)``
    returns the per-row values for the kernel matrix ``K``.
    """

    value: Callable
    grad: Callable | None = None
    name: str = "custom"
    rows: Callable | None = None
    row_grads: Callable | None = None

    def __call__(self, x, p, ys):
        return self.value(x, p, ys)

    def gradient(self, x, p, ys):
        if self.grad is not None:
            return self.grad(x, p, ys)
        h = 1e-7
        g = np.zeros_like(p)
        for j in range(p.size):
            e = np.zeros_like(p)
            e[j] = h
            g[j] = (self.value(x, p + e, ys) - self.value(x, p - e, ys)) / (2 * h)
        return g

    def row_values(self, X, K, ys) -> np.ndarray:
        if self.rows is not None:
            return self.rows(X, K, ys)
        return np.array([self.value(x, p, ys) for x, p in zip(X, K)])

    def row_gradients(self, X, K, ys) -> np.ndarray:
        if self.row_grads is not None:
            return self.row_grads(X, K, ys)
        return np.array([self.gradient(x, p, ys) for x, p in zip(X, K)])


def c_lambda(lam: float) -> WeakCost:
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")

    def value(x, p, ys):
        b = p @ ys
        spread = p @ ((ys - x) ** 2).sum(axis=1)
        return (lam - 1.0) * spread + float(np.sum((b - x) ** 2))

    def grad(x, p, ys):
        b = p @ ys
        return (lam - 1.0) * ((ys - x) ** 2).sum(axis=1) + 2.0 * ys @ (b - x)

    def rows(X, K, ys):
        D = ((X[:, None, :] - ys[None, :, :]) ** 2).sum(axis=-1)
        r = K @ ys - X
        return (lam - 1.0) * (K * D).sum(axis=1) + (r * r).sum(axis=1)

    def row_grads(X, K, ys):
        D = ((X[:, None, :] - ys[None, :, :]) ** 2).sum(axis=-1)
        return (lam - 1.0) * D + 2.0 * (K @ ys - X) @ ys.T

    return WeakCost(value, grad, f"c_lambda({lam})", rows, row_grads)


barycentric_cost = c_lambda(1.0)
zero_cost = WeakCost(
    lambda x, p, ys: 0.0,
    lambda x, p, ys: np.zeros_like(p),
    "zero",
    lambda X, K, ys: np.zeros(X.shape[0]),
    lambda X, K, ys: np.zeros_like(K),
)


def weak_cost_value(plan: np.ndarray, mu: DiscreteMeasure, nu: DiscreteMeasure, cost: WeakCost) -> float:
    """``sum_i mu_i c(x_i, p_i)`` for the kernel rows ``p_i = plan_i / mu_i``."""
    rows = plan / mu.weights[:, None]
    return math.fsum(mu.weights * cost.row_values(mu.points, rows, nu.points))


@dataclass(frozen=True)
class LambdaReduction:
    lam: float
    scaled_measure: DiscreteMeasure
    constant: float


def lambda_constant(mu: DiscreteMeasure, nu: DiscreteMeasure, lam: float) -> float:
    return -lam * (lam - 1.0) * second_moment(mu) + (lam - 1.0) * second_moment(nu)


def reduce_lambda(mu: DiscreteMeasure, nu: DiscreteMeasure, lam: float) -> LambdaReduction:
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        raise NegativeLambda("the reduction needs lambda > 0; use solve_lambda for lambda = 0")
    return LambdaReduction(lam, scale(mu, lam), lambda_constant(mu, nu, lam))


@dataclass
class LambdaSolution:
    value: float
    plan: np.ndarray
    reduction: LambdaReduction | None


def solve_lambda(mu: DiscreteMeasure, nu: DiscreteMeasure, lam: float, **solver_opts) -> LambdaSolution:
    """Optimal ``c_lambda`` transport cost and plan.

    For ``lambda > 0`` the plan rows are those of the barycentric problem for
    ``lambda mu`` (scaling is injective, so atoms keep their order).  For
    ``lambda = 0`` the product coupling is returned.
    """
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        plan = product_plan(mu, nu)
        return LambdaSolution(weak_cost_value(plan, mu, nu, c_lambda(0.0)), plan, None)
    red = reduce_lambda(mu, nu, lam)
    sol = solve_barycentric(red.scaled_measure, nu, **solver_opts)
    return LambdaSolution(red.constant + sol.value, sol.plan.matrix, red)


# ---------------------------------------------------------------------------
# brute-force oracle


def project_transport_polytope(Z, a, b, duals=None, tol=1e-14, max_iter=200):
    """Euclidean projection of ``Z`` onto couplings with marginals ``a`` and ``b``.

    The projection is ``max(0, Z_ij + u_i + v_j)``; the potentials solve a
    piecewise-linear system handled by a semismooth Newton method with
    backtracking on the concave dual.  Returns ``(plan, (u, v))``.
    """
    n, m = Z.shape
    if duals is None:
        u = (a - Z.sum(axis=1)) / m
        v = np.zeros(m)
    else:
        u, v = (d.copy() for d in duals)

    def dual(u, v):
        P = np.maximum(Z + u[:, None] + v[None, :], 0.0)
        return a @ u + b @ v - 0.5 * np.sum(P * P), P

    val, P = dual(u, v)
    for _ in range(max_iter):
        ru = a - P.sum(axis=1)
        rv = b - P.sum(axis=0)
        if max(np.abs(ru).max(), np.abs(rv).max()) <= tol:
            break
        S = (P > 0).astype(float)
        H = np.zeros((n + m, n + m))
        # empty rows/columns get unit curvature so their step stays bounded
        H[:n, :n] = np.diag(np.maximum(S.sum(axis=1), 1.0))
        H[n:, n:] = np.diag(np.maximum(S.sum(axis=0), 1.0))
        H[:n, n:] = S
        H[n:, :n] = S.T
        r = np.concatenate([ru, rv])
        step = np.linalg.lstsq(H + 1e-12 * np.eye(n + m), r, rcond=None)[0]
        if not np.all(np.isfinite(step)) or r @ step <= 0:
            step = r
        t = 1.0
        while True:
            nu_, nv_ = u + t * step[:n], v + t * step[n:]
            nval, nP = dual(nu_, nv_)
            if nval >= val + 1e-4 * t * (r @ step) or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            break  # round-off level: no ascent direction left
        u, v, val, P = nu_, nv_, nval, nP
    return P, (u, v)


def transport_vertices(a, b):
    """All vertices of the transport polytope (intended for n, m <= 3)."""
    n, m = len(a), len(b)
    A = np.zeros((n + m - 1, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m - 1):
        A[n + j, j::m] = 1.0
    rhs = np.concatenate([a, b[:-1]])
    seen = {}
    for cells in itertools.combinations(range(n * m), n + m - 1):
        B = A[:, cells]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        x = np.linalg.solve(B, rhs)
        if x.min() < -1e-12:
            continue
        plan = np.zeros(n * m)
        plan[list(cells)] = np.maximum(x, 0.0)
        key = np.round(plan, 12).tobytes()
        seen.setdefault(key, plan.reshape(n, m))
    return list(seen.values())


def _sinkhorn_interior(K, a, b, iters=500):
    u = np.ones_like(a)
    v = np.ones_like(b)
    for _ in range(iters):
        u = a / (K @ v)
        v = b / (K.T @ u)
    return u[:, None] * K * v[None, :]


@dataclass
class OracleResult:
    value: float
    plan: np.ndarray
    starts: int
    gap: float


def brute_force_weak_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: WeakCost = barycentric_cost,
                          restarts: int = 32, seed: int = 0) -> OracleResult:
    """Minimise ``sum_i mu_i c(x_i, p_i)`` over couplings with a general-purpose solver.

    SLSQP (from scipy) runs from the product plan, ``restarts`` random interior
    plans and, for ``n, m <= 3``, every vertex of the transport polytope; the
    best result is kept.  Its linear-minimisation gap
    ``max_s <grad F(P), P - s>`` bounds ``F(P) - min F`` for convex costs and
    is returned as ``gap``.

    Raises
    ------
    TooLarge
        ``n * m`` exceeds 64.
    """
    from scipy.optimize import minimize

    n, m = mu.n, nu.n
    if n * m > MAX_ORACLE_SIZE:
        raise TooLarge(f"oracle limited to n*m <= {MAX_ORACLE_SIZE}, got {n * m}")
    a, b = mu.weights, nu.weights
    X, Y = mu.points, nu.points
    rng = np.random.default_rng(seed)

    def F(P):
        return float(a @ cost.row_values(X, P / a[:, None], Y))

    def grad(P):
        return cost.row_gradients(X, P / a[:, None], Y)

    def lmo_gap(P):
        g = grad(P)
        s, *_ = solve_transport(g, mu, nu)
        return max(float(np.sum(g * (P - s.matrix))), 0.0)

    # the last column sum is implied by the others; SLSQP needs full row rank
    A = np.zeros((n + m - 1, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m - 1):
        A[n + j, j::m] = 1.0
    rhs = np.concatenate([a, b[:-1]])
    constraint = {"type": "eq", "fun": lambda p: A @ p - rhs, "jac": lambda p: A}

    starts = [product_plan(mu, nu)]
    for _ in range(restarts):
        K = rng.dirichlet(np.ones(n * m)).reshape(n, m) + 1e-3
        starts.append(_sinkhorn_interior(K, a, b))
    if n <= 3 and m <= 3:
        starts.extend(transport_vertices(a, b))

    best = None
    for P0 in starts:
        res = minimize(
            lambda p: F(p.reshape(n, m)),
            P0.reshape(-1),
            jac=lambda p: grad(p.reshape(n, m)).reshape(-1),
            method="SLSQP",
            bounds=[(0.0, None)] * (n * m),
            constraints=[constraint],
            options={"ftol": 1e-14, "maxiter": 500},
        )
        P, _ = project_transport_polytope(res.x.reshape(n, m), a, b)
        val = F(P)
        if best is None or val < best[1]:
            best = (P, val)
    P, val = best
    gap = lmo_gap(P)
    return OracleResult(val, P, len(starts), gap)


def plan_as_transport(P, mu, nu) -> TransportPlan:
    return TransportPlan(mu, nu, P)
