"""Dual certificates for the barycentric quadratic cost.

For any convex ``f`` the quantity

    D(f) = sum_i mu_i Q2f(x_i) - sum_j nu_j f(y_j),
    Q2f(x) = inf_y f(y) + |y - x|^2,

is a lower bound on the primal value.  Given a Frank-Wolfe solution with
barycenters ``b_i`` we take the max-affine function

    f(y) = max_k ( 2 (x_k - b_k) . y + c_k )

whose offsets ``c_k`` are the row potentials of the transport LP solved in
the last Frank-Wolfe step (cost ``2 (b_i - x_i) . y_j``).  With that choice
``D(f)`` equals the primal value up to at most the Frank-Wolfe gap, and
``y -> h(y) = (f(y) + |y|^2) / 2`` has conjugate ``phi = h*`` whose gradient
sends ``x_i`` to ``b_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._qp import simplex_qp
from .errors import DegeneratePotentials, NotConverged, OutsideDomain
from .linprog import LpStatus, TransportSolver, solve_lp
from .wot import WotSolution

CERTIFIED_REL_TOL = 1e-6


@dataclass(frozen=True)
class MaxAffineFunction:
    """``g(y) = max_k (slopes[k] . y + offsets[k])``."""

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        slopes = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if slopes.shape[0] == 0 or slopes.shape[0] != offsets.size:
            raise ValueError("need at least one piece and one offset per slope")
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    def __len__(self):
        return self.offsets.size

    def values(self, y) -> np.ndarray:
        """Value of every affine piece at ``y`` (shape ``(..., K)``)."""
        y = np.asarray(y, dtype=float)
        return y @ self.slopes.T + self.offsets

    def __call__(self, y):
        return self.values(y).max(axis=-1)

    def active_piece(self, y) -> np.ndarray:
        return self.values(y).argmax(axis=-1)

    def to_dict(self) -> dict:
        return {"slopes": self.slopes.tolist(), "offsets": self.offsets.tolist()}


def conjugate_at(g: MaxAffineFunction, z) -> float:
    """Legendre transform of a max-affine function at ``z``.

    ``g*(z) = min { -sum_k lam_k c_k : sum_k lam_k a_k = z, lam in simplex }``,
    which is ``+inf`` outside the convex hull of the slopes.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    K = len(g)
    A = np.vstack([g.slopes.T, np.ones((1, K))])
    b = np.concatenate([z, [1.0]])
    sol = solve_lp(-g.offsets, A, b)
    if sol.status is LpStatus.INFEASIBLE:
        return math.inf
    return sol.value


def _q2_weights(f: MaxAffineFunction, x):
    # Q2f(x) = max over the simplex of sum lam_k (a_k.x + c_k) - |sum lam_k a_k|^2 / 4
    M = 0.5 * f.slopes @ f.slopes.T
    g = f.values(x)
    return simplex_qp(M, g), M, g


def q2_at(f: MaxAffineFunction, x) -> float:
    """Inf-convolution ``Q2f(x) = inf_y f(y) + |y - x|^2`` of a max-affine ``f``.

    Solved through its dual over the probability simplex.  The returned number
    is the dual (lower-bound) value; a primal point is used to check that the
    bound is tight.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    lam, M, g = _q2_weights(f, x)
    lower = float(g @ lam - 0.5 * lam @ M @ lam)
    y = x - 0.5 * lam @ f.slopes
    upper = float(f(y) + np.sum((y - x) ** 2))
    if upper - lower > 1e-9 * (1.0 + abs(upper)):
        raise OutsideDomain(f"inf-convolution not resolved: bounds {lower!r} and {upper!r}")
    return lower


def prox_point(f: MaxAffineFunction, x) -> np.ndarray:
    """Minimiser of ``y -> f(y) + |y - x|^2``, i.e. the gradient of ``h*`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    lam, _, _ = _q2_weights(f, x)
    return x - 0.5 * lam @ f.slopes


def h_value(f: MaxAffineFunction, y) -> float:
    """``h(y) = (f(y) + |y|^2) / 2``."""
    y = np.asarray(y, dtype=float)
    return 0.5 * (f(y) + np.sum(y * y, axis=-1))


def phi_value(f: MaxAffineFunction, x) -> float:
    """``phi = h*``, computed as ``(|x|^2 - Q2f(x)) / 2``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return 0.5 * (float(x @ x) - q2_at(f, x))


def build_dual_potential(sol: WotSolution, check_tol: float = 1e-6) -> MaxAffineFunction:
    """Max-affine dual potential attached to a Frank-Wolfe solution.

    Raises
    ------
    NotConverged
        ``sol`` did not reach its tolerance.
    DegeneratePotentials
        Piece ``i`` is not the active one at ``b_i`` up to ``check_tol``; this
        only happens when the upstream solve went wrong.
    """
    if not sol.converged:
        raise NotConverged("dual potential needs a converged solution")
    mu, nu = sol.mu, sol.nu
    disp = sol.barycenters - mu.points
    G = 2.0 * disp @ nu.points.T
    _, _, u, _ = TransportSolver(mu, nu).solve(G)
    f = MaxAffineFunction(-2.0 * disp, u)

    at_b = f.values(sol.barycenters)
    slack = at_b.max(axis=1) - np.diag(at_b)
    scale = 1.0 + np.abs(f.offsets).max()
    worst = int(np.argmax(slack))
    if slack[worst] > check_tol * scale:
        raise DegeneratePotentials(
            f"piece {worst} misses the maximum at its barycenter by {slack[worst]:.3e}"
        )
    return f


def dual_value(mu, nu, f: MaxAffineFunction) -> float:
    q = [q2_at(f, x) for x in mu.points]
    return math.fsum(mu.weights * np.array(q)) - math.fsum(nu.weights * f(nu.points))


def duality_gap(sol: WotSolution, f: MaxAffineFunction) -> float:
    """Primal value minus the dual value of ``f``; nonnegative up to round-off."""
    return sol.value - dual_value(sol.mu, sol.nu, f)


def is_certified(sol: WotSolution, gap: float) -> bool:
    return gap <= CERTIFIED_REL_TOL * (1.0 + sol.value)


def certificate(sol: WotSolution, f: MaxAffineFunction | None = None) -> dict:
    """JSON-ready certificate: pieces, per-atom Q2 values and the gap."""
    if f is None:
        f = build_dual_potential(sol)
    q2 = [q2_at(f, x) for x in sol.mu.points]
    dual = math.fsum(sol.mu.weights * np.array(q2)) - math.fsum(sol.nu.weights * f(sol.nu.points))
    gap = sol.value - dual
    return {
        "pieces": f.to_dict(),
        "q2_at_mu_atoms": q2,
        "f_at_nu_atoms": f(sol.nu.points).tolist(),
        "primal": sol.value,
        "dual": dual,
        "gap": gap,
        "certified": is_certified(sol, gap),
    }
