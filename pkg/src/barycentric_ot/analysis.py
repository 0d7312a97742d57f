"""Executable checks of the structural properties of optimal barycentric plans.

* :func:`check_c2_monotonicity`: no exchange of kernel mass between two
  atoms can lower the cost.
* :func:`check_map_regularity`: ``x_i -> b_i`` is the gradient of a convex
  function with 1-Lipschitz gradient, i.e. firmly nonexpansive on the atoms.
* :func:`check_equality_w2_t2`: ``W2^2(mu, nu)`` against the barycentric cost.
* :func:`check_submartingale_1d`: on the line, when ``mu`` is dominated by
  ``nu`` in increasing convex order, the optimal kernels move mass upwards.

Every check returns a :class:`CheckReport` whose ``passed`` flag is
``worst_violation <= tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, PreconditionIcxFails
from .linprog import TransportPlan, transport_scale, w2_squared
from .measures import DiscreteMeasure, validate_measure
from .order import check_icx_order_1d, check_stochastic_order_1d
from .wot import WotSolution, extract_projection, solve_barycentric

SUPPORT_EPS = 1e-10
EQUALITY_TOL = 1e-4


@dataclass
class CheckReport:
    """Outcome of a structural check.

    ``worst_violation`` is the largest amount by which any tested inequality
    fails (zero or negative when all hold); ``witness`` describes where it
    happens.  ``marginal`` flags a pass that only holds thanks to the
    tolerance.
    """

    passed: bool
    worst_violation: float
    tol: float
    witness: dict | None = None
    marginal: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "tol": self.tol,
            "marginal": self.marginal,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out


def default_check_tol(mu: DiscreteMeasure, nu: DiscreteMeasure, rel: float = 1e-6) -> float:
    return rel * transport_scale(mu, nu)


def check_c2_monotonicity(plan: TransportPlan, tol: float = 1e-6,
                          support_eps: float = SUPPORT_EPS) -> CheckReport:
    """Pairwise exchange test for the barycentric quadratic cost.

    For atoms ``i != k`` with displacements ``r_i = b_i - x_i`` and every
    ``a`` in the support of kernel ``i`` and ``c`` in the support of kernel
    ``k`` it requires ``<r_i - r_k, c - a> >= -tol``.  Moving a little mass
    of ``a`` from ``i`` to ``k`` against the same mass of ``c`` from ``k`` to
    ``i`` changes the cost at first order by a positive multiple of that
    inner product, so a negative value exhibits an improving swap.

    The support of a kernel is the set of columns with ``pi_ij > support_eps * mu_i``.
    """
    mu, nu = plan.row_measure, plan.col_measure
    disp = plan.barycenters() - mu.points
    supports = plan.support(support_eps)
    Y = nu.points
    worst = -math.inf
    witness = None
    for i in range(mu.n):
        for k in range(mu.n):
            if i == k:
                continue
            dr = disp[i] - disp[k]
            # values[s, t] = <dr, Y[t] - Y[s]> for s in supp_i, t in supp_k
            proj = Y @ dr
            vals = proj[supports[k]][None, :] - proj[supports[i]][:, None]
            if vals.size == 0:
                continue
            s, t = np.unravel_index(np.argmin(vals), vals.shape)
            v = -float(vals[s, t])
            if v > worst:
                worst = v
                witness = {
                    "i": i,
                    "k": k,
                    "a": Y[supports[i][s]].tolist(),
                    "b": Y[supports[k][t]].tolist(),
                    "value": float(vals[s, t]),
                }
    if witness is None:
        return CheckReport(True, 0.0, tol)
    return CheckReport(worst <= tol, worst, tol, witness)


def check_map_regularity(points, images, weights=None, tol: float = 1e-6) -> CheckReport:
    """Check that ``x_i -> b_i`` is a firmly nonexpansive map on the atoms.

    For every pair it tests ``|b_i - b_j| <= |x_i - x_j| + tol`` and
    ``<b_i - b_j, x_i - x_j> >= |b_i - b_j|^2 - tol``; the second inequality
    characterises gradients of convex functions with 1-Lipschitz gradient.
    ``weights`` are carried for reporting only.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    B = np.asarray(images, dtype=float).reshape(X.shape)
    worst = -math.inf
    witness = None
    for i in range(X.shape[0]):
        for j in range(i + 1, X.shape[0]):
            dx, db = X[i] - X[j], B[i] - B[j]
            lip = float(np.linalg.norm(db) - np.linalg.norm(dx))
            mono = float(db @ db - db @ dx)
            for kind, v in (("lipschitz", lip), ("monotone", mono)):
                if v > worst:
                    worst = v
                    witness = {"i": i, "j": j, "kind": kind, "value": v}
    details = {}
    if weights is not None:
        details["weights"] = np.asarray(weights, dtype=float).tolist()
    if witness is None:
        return CheckReport(True, 0.0, tol, details=details)
    return CheckReport(worst <= tol, worst, tol, witness, details=details)


@dataclass
class EqualityReport:
    """Report of :func:`check_equality_w2_t2` with the two compared values."""

    report: CheckReport
    w2_squared: float
    t2: float
    w2_mu_bar_nu: float | None

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> dict:
        return {
            **self.report.to_dict(),
            "w2_squared": self.w2_squared,
            "t2": self.t2,
            "w2_mu_bar_nu": self.w2_mu_bar_nu,
        }


def check_equality_w2_t2(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = EQUALITY_TOL,
                         mu_bar_tol: float = EQUALITY_TOL, sol: WotSolution | None = None,
                         **solver_opts) -> EqualityReport:
    """Compare ``W2^2(mu, nu)`` with the barycentric cost.

    The two agree exactly when the quadratic optimal map is the gradient of a
    convex function with 1-Lipschitz gradient, in which case the projection
    of ``mu`` is ``nu`` itself.  Passes iff
    ``|W2^2 - T2| <= tol * (1 + W2^2)`` and then also requires
    ``W2(mu_bar, nu) <= mu_bar_tol``.
    """
    w2, _, _ = w2_squared(mu, nu)
    if sol is None:
        sol = solve_barycentric(mu, nu, **solver_opts)
    t2 = sol.value
    gap = w2 - t2
    bound = tol * (1.0 + w2)
    violation = abs(gap) - bound
    if violation > 0:
        rep = CheckReport(False, abs(gap), bound, {"w2_squared": w2, "t2": t2})
        return EqualityReport(rep, w2, t2, None)
    mu_bar = extract_projection(sol).measure
    dist = math.sqrt(max(w2_squared(mu_bar, nu)[0], 0.0))
    rep = CheckReport(dist <= mu_bar_tol, abs(gap), bound, details={"w2_mu_bar_nu": dist})
    return EqualityReport(rep, w2, t2, dist)


def check_submartingale_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, sol: WotSolution | None = None,
                           tol: float | None = None, **solver_opts) -> CheckReport:
    """On the line, check ``b_i >= x_i`` and ``mu <=_s mu_bar``.

    Both statements hold for exact optimisers when ``mu`` is dominated by
    ``nu`` in increasing convex order.  For a Frank-Wolfe solution they are
    tested with slack ``tol``, by default ``sqrt(fw_gap) + 1e-6``: the
    barycenters of an ``eps``-optimal plan are within ``sqrt(eps / mu_i)`` of
    the exact ones in the weighted norm.  The stochastic order is tested
    against ``mu_bar`` shifted up by ``tol``.  Passes that need the slack are
    flagged ``marginal``.

    Raises
    ------
    PreconditionIcxFails
        ``mu`` is not dominated by ``nu`` in increasing convex order.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionMismatch("1D only: the submartingale check needs measures on the line")
    if not check_icx_order_1d(mu, nu).holds:
        raise PreconditionIcxFails("mu is not dominated by nu in increasing convex order")
    if sol is None:
        sol = solve_barycentric(mu, nu, **solver_opts)
    if tol is None:
        tol = math.sqrt(max(sol.fw_gap, 0.0)) + 1e-6
    drop = mu.points[:, 0] - sol.barycenters[:, 0]
    i = int(np.argmax(drop))
    worst = float(drop[i])
    mu_bar = extract_projection(sol).measure
    shifted = validate_measure(mu_bar.points + tol, mu_bar.weights)
    stoch = check_stochastic_order_1d(mu, shifted)
    passed = worst <= tol and stoch.holds
    exact_stoch = check_stochastic_order_1d(mu, mu_bar).holds
    marginal = passed and (worst > 0 or not exact_stoch)
    witness = {"i": i, "x": float(mu.points[i, 0]), "b": float(sol.barycenters[i, 0])}
    details = {"stochastic_order": stoch.holds}
    if stoch.violation is not None:
        details["stochastic_violation"] = stoch.violation
    return CheckReport(passed, worst, tol, witness, marginal, details)
