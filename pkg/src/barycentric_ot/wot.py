"""Barycentric weak transport cost with quadratic penalty.

For couplings ``pi`` of ``mu`` and ``nu`` with row barycenters
``b_i = sum_j pi_ij y_j / mu_i`` the objective is

    F(pi) = sum_i mu_i |b_i - x_i|^2,

a convex quadratic on the transport polytope.  It is minimised by
Frank-Wolfe, whose linear subproblem is an ordinary transport LP with cost
``G_ij = 2 (b_i - x_i) . y_j``.  The Frank-Wolfe gap ``<G, pi - s>`` bounds the
suboptimality of every iterate, so a converged solution carries its own
certificate.

Three variants are available:

``"plain"``
    Classic Frank-Wolfe with exact line search.  Sublinear rate.
``"away"``
    Away-step Frank-Wolfe over the active vertex set.  Linear rate.
``"corrective"``
    Fully-corrective Frank-Wolfe: after each new vertex the objective is
    minimised exactly over the convex hull of all active vertices.  It
    terminates after finitely many vertex additions and is the default.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._qp import simplex_qp
from .errors import DimensionMismatch, NotConverged, NumericBreakdown
from .linprog import TransportPlan, TransportSolver
from .measures import DiscreteMeasure, merge_close_atoms, second_moment

METHODS = ("plain", "away", "corrective")


@dataclass
class WotSolution:
    """Output of :func:`solve_barycentric`.

    ``barycenters[i]`` is the conditional mean of the plan's kernel at
    ``mu.points[i]``; ``value`` is recomputed from the plan.
    """

    plan: TransportPlan
    barycenters: np.ndarray
    value: float
    fw_gap: float
    iterations: int
    converged: bool
    tol: float
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def mu(self) -> DiscreteMeasure:
        return self.plan.row_measure

    @property
    def nu(self) -> DiscreteMeasure:
        return self.plan.col_measure


@dataclass
class Projection:
    """The projection of ``mu`` onto the convex-order ball of ``nu``.

    ``map_points[i]`` is the (unmerged) image of ``mu.points[i]`` and
    ``assignment[i]`` the index of the atom of ``measure`` it was merged into.
    """

    measure: DiscreteMeasure
    source: DiscreteMeasure
    map_points: np.ndarray
    assignment: np.ndarray


def conditional_barycenters(matrix: np.ndarray, mu: DiscreteMeasure, nu: DiscreteMeasure):
    return (matrix @ nu.points) / mu.weights[:, None]


def _objective(mu: DiscreteMeasure, b: np.ndarray) -> float:
    r = b - mu.points
    return math.fsum(mu.weights * (r * r).sum(axis=1))


def objective_value(plan: TransportPlan) -> float:
    """``sum_i mu_i |b_i - x_i|^2`` for the plan's conditional barycenters."""
    mu = plan.row_measure
    return _objective(mu, plan.barycenters())


def default_tol(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return 1e-8 * (1.0 + second_moment(mu) + second_moment(nu))


def product_plan(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    return np.outer(mu.weights, nu.weights)


def random_vertex(mu: DiscreteMeasure, nu: DiscreteMeasure, seed=0) -> np.ndarray:
    """A vertex of the transport polytope picked by a random linear cost."""
    rng = np.random.default_rng(seed)
    plan, *_ = TransportSolver(mu, nu).solve(rng.normal(size=(mu.n, nu.n)))
    return plan


class _Atoms:
    """Active vertices of a Frank-Wolfe run and their convex weights."""

    def __init__(self, start: np.ndarray):
        self.mats = [start]
        self.keys = [self._key(start)]
        self.weights = np.array([1.0])

    @staticmethod
    def _key(mat):
        return np.round(mat, 13).tobytes()

    def index(self, mat) -> int:
        key = self._key(mat)
        for k, other in enumerate(self.keys):
            if other == key:
                return k
        self.mats.append(mat)
        self.keys.append(key)
        self.weights = np.append(self.weights, 0.0)
        return len(self.mats) - 1

    def prune(self, eps=0.0):
        keep = self.weights > eps
        if keep.all():
            return
        self.mats = [m for m, k in zip(self.mats, keep) if k]
        self.keys = [m for m, k in zip(self.keys, keep) if k]
        self.weights = self.weights[keep] / self.weights[keep].sum()

    def combination(self) -> np.ndarray:
        return np.tensordot(self.weights, np.array(self.mats), axes=1)


def _exact_step(mu, r, db, gamma_max):
    """Minimiser of ``sum mu |r + t db|^2`` over ``t`` in ``[0, gamma_max]``."""
    den = math.fsum(mu.weights * (db * db).sum(axis=1))
    if den <= 0.0:
        return 0.0
    num = -math.fsum(mu.weights * (r * db).sum(axis=1))
    return min(max(num / den, 0.0), gamma_max)


def _corrective_weights(mu, nu, atoms: _Atoms):
    """Exact minimisation of the objective over the hull of the active atoms."""
    bs = np.array([conditional_barycenters(m, mu, nu) for m in atoms.mats])  # (k, n, d)
    w = mu.weights
    M = 2.0 * np.einsum("i,kid,lid->kl", w, bs, bs)
    g = 2.0 * np.einsum("i,kid,id->k", w, bs, mu.points)
    M = 0.5 * (M + M.T)
    return simplex_qp(M, g, start=atoms.weights)


def solve_barycentric(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    tol: float | None = None,
    max_iters: int = 100_000,
    start="product",
    method: str = "corrective",
    seed: int = 0,
    record_history: bool = False,
) -> WotSolution:
    """Minimise the barycentric quadratic cost over couplings of ``mu`` and ``nu``.

    Parameters
    ----------
    tol : float, optional
        Stop once the Frank-Wolfe gap is at most ``tol``.  Defaults to
        ``1e-8 * (1 + M2(mu) + M2(nu))``.
    start : {"product", "vertex"} or array
        Initial coupling: the product plan, a random vertex (seeded by
        ``seed``), or an explicit ``(n, m)`` matrix.
    method : {"corrective", "away", "plain"}

    Returns
    -------
    WotSolution
        When ``max_iters`` is exhausted the best iterate is returned with
        ``converged=False`` and a warning is emitted.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dimensions differ: {mu.dim} vs {nu.dim}")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if tol is None:
        tol = default_tol(mu, nu)
    if not tol > 0:
        raise ValueError("tol must be positive")

    lmo = TransportSolver(mu, nu)
    if isinstance(start, str):
        if start == "product":
            pi = product_plan(mu, nu)
        elif start == "vertex":
            pi = random_vertex(mu, nu, seed)
        else:
            raise ValueError(f"unknown start {start!r}")
    else:
        pi = np.array(start, dtype=float)
        if pi.shape != (mu.n, nu.n):
            raise DimensionMismatch(f"start plan has shape {pi.shape}")

    atoms = _Atoms(pi)
    X, Y, w = mu.points, nu.points, mu.weights
    scale = 1.0 + second_moment(mu) + second_moment(nu)
    history = []
    best = None
    converged = False
    gap = math.inf
    it = 0
    for it in range(max_iters + 1):
        b = conditional_barycenters(pi, mu, nu)
        r = b - X
        value = _objective(mu, b)
        if history and value > history[-1] + 1e-13 * scale:
            raise NumericBreakdown(f"objective increased from {history[-1]!r} to {value!r}")
        history.append(value)

        G = 2.0 * r @ Y.T
        s, *_ = lmo.solve(G)
        gap = max(float(np.sum(G * (pi - s))), 0.0)
        if best is None or value < best[1]:
            best = (pi.copy(), value, gap)
        if gap <= tol:
            converged = True
            break
        if it == max_iters:
            break

        if method == "plain":
            db = conditional_barycenters(s, mu, nu) - b
            gamma = _exact_step(mu, r, db, 1.0)
            pi = pi + gamma * (s - pi)
            continue

        k_new = atoms.index(s)
        if method == "corrective":
            atoms.weights = _corrective_weights(mu, nu, atoms)
            atoms.prune()
            pi = atoms.combination()
            continue

        # away-step variant
        scores = np.array([np.sum(G * m) for m in atoms.mats])
        active = atoms.weights > 0
        scores[~active] = -np.inf
        a = int(np.argmax(scores))
        fw_dir = s - pi
        away_dir = pi - atoms.mats[a]
        if np.sum(-G * fw_dir) >= np.sum(-G * away_dir) or atoms.weights[a] >= 1.0:
            db = conditional_barycenters(fw_dir, mu, nu)
            gamma = _exact_step(mu, r, db, 1.0)
            atoms.weights *= 1.0 - gamma
            atoms.weights[k_new] += gamma
        else:
            alpha = atoms.weights[a]
            gmax = alpha / (1.0 - alpha)
            db = conditional_barycenters(away_dir, mu, nu)
            gamma = _exact_step(mu, r, db, gmax)
            atoms.weights *= 1.0 + gamma
            atoms.weights[a] -= gamma
            if gamma >= gmax:
                atoms.weights[a] = 0.0
        atoms.prune()
        pi = atoms.combination()

    if not converged:
        pi, value, gap = best
        warnings.warn(
            f"Frank-Wolfe stopped after {it} iterations with gap {gap:.3e} > tol {tol:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    plan = TransportPlan(mu, nu, pi)
    b = conditional_barycenters(pi, mu, nu)
    return WotSolution(
        plan=plan,
        barycenters=b,
        value=_objective(mu, b),
        fw_gap=gap,
        iterations=it,
        converged=converged,
        tol=tol,
        history=history if record_history else [],
    )


def merge_eps(nu: DiscreteMeasure) -> float:
    return 1e-7 * (1.0 + nu.diameter())


def extract_projection(sol: WotSolution, eps: float | None = None) -> Projection:
    """Push ``mu`` forward by ``x_i -> b_i``, merging images closer than ``eps``."""
    if not sol.converged:
        raise NotConverged("projection requires a converged solution")
    if eps is None:
        eps = merge_eps(sol.nu)
    measure, labels = merge_close_atoms(sol.barycenters, sol.mu.weights, eps)
    return Projection(measure, sol.mu, sol.barycenters.copy(), labels)
