"""Convex, increasing-convex and stochastic order between discrete measures.

Convex order in any dimension is decided through Strassen's theorem: ``mu`` is
dominated by ``nu`` exactly when a martingale coupling exists, which for
finite supports is an LP feasibility question.  The one-dimensional orders
use stop-loss transforms and distribution functions evaluated at the kinks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MapAtomMissing, OrderViolated
from .linprog import LpStatus, TransportPlan, solve_lp, transport_constraints
from .measures import DiscreteMeasure, barycenter

EXACT_TOL = 1e-9
MARGINAL_TOL = 1e-6


class Relation(str, enum.Enum):
    CONVEX = "ConvexOrder"
    ICX = "IcxOrder"
    STOCHASTIC = "StochasticOrder"


@dataclass
class OrderCertificate:
    """Answer to an order query.

    For a positive convex-order answer ``witness`` is a martingale coupling;
    for a negative one-dimensional answer ``violation`` names the threshold
    where the defining inequality fails and by how much.
    """

    relation: Relation
    holds: bool
    witness: TransportPlan | None = None
    violation: dict | None = None
    marginal: bool = False
    residual: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "relation": self.relation.value,
            "holds": self.holds,
            "marginal": self.marginal,
            "residual": self.residual,
        }
        if self.witness is not None:
            out["witness"] = self.witness.matrix.tolist()
        if self.violation is not None:
            out["violation"] = self.violation
        return out


def _require_1d(*measures):
    for m in measures:
        if m.dim != 1:
            raise DimensionMismatch("1D only: this order test needs measures on the line")


def barycenter_residuals(plan: TransportPlan) -> np.ndarray:
    """``|sum_j q_ij y_j - x_i|`` for every row of the plan."""
    return np.linalg.norm(plan.barycenters() - plan.row_measure.points, axis=1)


def check_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = EXACT_TOL,
                       marginal_tol: float = MARGINAL_TOL) -> OrderCertificate:
    """Decide ``mu <=_c nu`` by searching for a martingale coupling.

    The LP keeps both marginals exact and minimises the total absolute
    violation of the martingale constraints ``sum_j pi_ij y_j = mu_i x_i``.
    The query holds when the worst per-row barycenter residual is at most
    ``tol``; residuals up to ``marginal_tol`` still hold but are flagged
    ``marginal=True``.  ``marginal_tol`` absorbs the error of approximate
    inputs such as a Frank-Wolfe projection.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dimensions differ: {mu.dim} vs {nu.dim}")
    n, m, d = mu.n, nu.n, mu.dim
    npi = n * m
    nslack = 2 * n * d
    A_marg = transport_constraints(n, m)
    A_mart = np.zeros((n * d, npi))
    for i in range(n):
        A_mart[i * d : (i + 1) * d, i * m : (i + 1) * m] = nu.points.T
    A = np.zeros((n + m + n * d, npi + nslack))
    A[: n + m, :npi] = A_marg
    A[n + m :, :npi] = A_mart
    A[n + m :, npi : npi + n * d] = np.eye(n * d)
    A[n + m :, npi + n * d :] = -np.eye(n * d)
    b = np.concatenate([mu.weights, nu.weights, (mu.weights[:, None] * mu.points).reshape(-1)])
    c = np.concatenate([np.zeros(npi), np.ones(nslack)])
    # scaled slacks per row measure the barycenter error of that row's kernel
    c[npi:] = np.tile(1.0 / np.repeat(mu.weights, d), 2)

    sol = solve_lp(c, A, b)
    if sol.status is not LpStatus.OPTIMAL:  # the slack LP is always feasible
        return OrderCertificate(Relation.CONVEX, False, details={"lp_status": sol.status.value})
    plan = TransportPlan(mu, nu, np.maximum(sol.x[:npi].reshape(n, m), 0.0))
    residual = float(barycenter_residuals(plan).max())
    scale = 1.0 + np.abs(mu.points).max() + np.abs(nu.points).max()
    if residual <= tol * scale:
        return OrderCertificate(Relation.CONVEX, True, witness=plan, residual=residual)
    if residual <= marginal_tol * scale:
        return OrderCertificate(Relation.CONVEX, True, witness=plan, marginal=True, residual=residual)
    return OrderCertificate(
        Relation.CONVEX,
        False,
        residual=residual,
        violation={"min_total_barycenter_violation": float(sol.value)},
    )


def build_martingale_coupling(mu_bar: DiscreteMeasure, nu: DiscreteMeasure,
                              marginal_tol: float = MARGINAL_TOL) -> TransportPlan:
    """Martingale coupling from ``mu_bar`` to ``nu`` (an LP vertex, not canonical)."""
    cert = check_convex_order(mu_bar, nu, marginal_tol=marginal_tol)
    if not cert.holds:
        raise OrderViolated(f"no martingale coupling: residual {cert.residual:.3e}")
    return cert.witness


def _cdf(m: DiscreteMeasure, ts) -> np.ndarray:
    x = m.points[:, 0]
    return np.array([math.fsum(m.weights[x <= t]) for t in ts])


def check_stochastic_order_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-12) -> OrderCertificate:
    """``mu <=_s nu`` iff ``F_mu(t) >= F_nu(t)`` at every atom of either measure."""
    _require_1d(mu, nu)
    ts = np.unique(np.concatenate([mu.points[:, 0], nu.points[:, 0]]))
    diff = _cdf(mu, ts) - _cdf(nu, ts)
    k = int(np.argmin(diff))
    if diff[k] >= -tol:
        return OrderCertificate(Relation.STOCHASTIC, True)
    return OrderCertificate(
        Relation.STOCHASTIC, False,
        violation={"t": float(ts[k]), "cdf_mu": float(_cdf(mu, [ts[k]])[0]),
                   "cdf_nu": float(_cdf(nu, [ts[k]])[0])},
    )


def stop_loss(m: DiscreteMeasure, k: float) -> float:
    """``E (X - k)_+``."""
    return math.fsum(m.weights * np.maximum(m.points[:, 0] - k, 0.0))


def check_icx_order_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-10) -> OrderCertificate:
    """``mu <=_icx nu`` via means and stop-loss transforms at the kink points."""
    _require_1d(mu, nu)
    mean_mu, mean_nu = barycenter(mu)[0], barycenter(nu)[0]
    if mean_mu > mean_nu + tol:
        return OrderCertificate(
            Relation.ICX, False,
            violation={"k": "-inf", "mu": float(mean_mu), "nu": float(mean_nu)},
        )
    for k in np.unique(np.concatenate([mu.points[:, 0], nu.points[:, 0]])):
        a, b = stop_loss(mu, k), stop_loss(nu, k)
        if a > b + tol:
            return OrderCertificate(Relation.ICX, False, violation={"k": float(k), "mu": a, "nu": b})
    return OrderCertificate(Relation.ICX, True)


def compose_chain(mu: DiscreteMeasure, map_points, kernel: TransportPlan, assignment=None,
                  atol: float = 1e-7) -> TransportPlan:
    """Chain ``x -> b(x) -> y``: a deterministic step followed by a martingale kernel.

    Parameters
    ----------
    map_points : (n, d) array
        Image ``b(x_i)`` of every atom of ``mu``.
    kernel : TransportPlan
        Coupling of the image measure with ``nu``; its rows are the kernels.
    assignment : (n,) int array, optional
        Row of ``kernel`` used for each atom.  When omitted each ``b(x_i)``
        is matched to a kernel atom within ``atol``.

    Returns
    -------
    TransportPlan
        ``pi_ij = mu_i q_{b(x_i), j}``.
    """
    map_points = np.asarray(map_points, dtype=float).reshape(mu.n, -1)
    q = kernel.kernel
    src = kernel.row_measure.points
    if assignment is None:
        assignment = []
        for i, p in enumerate(map_points):
            dist = np.linalg.norm(src - p, axis=1)
            k = int(np.argmin(dist))
            if dist[k] > atol * (1.0 + np.abs(p).max()):
                raise MapAtomMissing(f"no kernel atom at image of atom {i}: {p.tolist()}")
            assignment.append(k)
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (mu.n,) or assignment.min() < 0 or assignment.max() >= q.shape[0]:
        raise MapAtomMissing("assignment does not cover every atom of mu")
    matrix = mu.weights[:, None] * q[assignment]
    return TransportPlan(mu, kernel.col_measure, matrix)
