"""Closed-form projection when ``nu`` lives on the vertices of a simplex.

If the atoms ``y_0, ..., y_k`` of ``nu`` are affinely independent with hull
``Delta``, the projection of ``mu`` on the convex-order ball of ``nu`` is the
image of ``mu`` under ``T(x) = proj_Delta(x + v)`` for a translation ``v``
chosen so that the image has the barycenter of ``nu``.  ``v`` is found
numerically; ``T`` is the gradient of

    phi(x) = |x + v|^2 / 2 - dist(x + v, Delta)^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._qp import simplex_qp
from .errors import BarycenterOnBoundary, DegenerateSimplex, DimensionMismatch, NoConvergence
from .measures import DiscreteMeasure, merge_close_atoms, validate_measure
from .wot import Projection

RANK_TOL = 1e-10


@dataclass(frozen=True)
class SimplexInstance:
    """Affinely independent vertices with probability weights on them."""

    vertices: np.ndarray
    nu_weights: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        w = np.asarray(self.nu_weights, dtype=float).reshape(-1)
        if V.shape[0] != w.size:
            raise DimensionMismatch("one weight per vertex is required")
        if V.shape[0] - 1 > V.shape[1]:
            raise DegenerateSimplex(f"{V.shape[0]} vertices cannot be affinely independent in R^{V.shape[1]}")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError("vertex weights must form a probability vector")
        E = V[1:] - V[0]
        if E.shape[0]:
            gram = E @ E.T
            s = np.linalg.eigvalsh(gram)
            if s.min() <= RANK_TOL * max(1.0, s.max()):
                raise DegenerateSimplex("vertices are affinely dependent")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "nu_weights", w)

    @classmethod
    def from_measure(cls, nu: DiscreteMeasure) -> "SimplexInstance":
        return cls(nu.points, nu.weights)

    @property
    def k(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def measure(self) -> DiscreteMeasure:
        return validate_measure(self.vertices, self.nu_weights)

    def barycenter(self) -> np.ndarray:
        return self.nu_weights @ self.vertices

    def affine_frame(self):
        """Origin ``y_0`` and an orthonormal basis (columns) of the affine span."""
        origin = self.vertices[0]
        E = (self.vertices[1:] - origin).T
        if E.shape[1] == 0:
            return origin, np.zeros((self.dim, 0))
        Q, _ = np.linalg.qr(E)
        return origin, Q


def project_to_simplex(z, simplex: SimplexInstance, start=None):
    """Closest point of the simplex to ``z`` and its barycentric coordinates.

    Solved with an active-set method over the faces; ``start`` optionally
    seeds the barycentric coordinates.

    Returns
    -------
    point : (d,) array
    lam : (k + 1,) array, nonnegative and summing to one
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    V = simplex.vertices
    if z.size != simplex.dim:
        raise DimensionMismatch(f"point has dim {z.size}, simplex has dim {simplex.dim}")
    lam = simplex_qp(V @ V.T, V @ z, start=start, tol=1e-14)
    return lam @ V, lam


def kkt_residual(z, simplex: SimplexInstance, lam) -> float:
    """Violation of the optimality conditions of the projection at ``lam``."""
    V = simplex.vertices
    p = lam @ V
    grad = V @ (p - np.asarray(z, dtype=float))  # derivative in lam
    level = grad[lam > 0].min()
    dual = max(0.0, level - grad.min())
    comp = float(np.abs((grad - level) * lam).max())
    feas = abs(lam.sum() - 1.0) + max(0.0, -lam.min())
    return max(dual, comp, feas)


def _distance_sq(z, simplex):
    p, _ = project_to_simplex(z, simplex)
    return float(np.sum((z - p) ** 2)), p


class _Reduced:
    """The problem written in coordinates of the affine span of the simplex."""

    def __init__(self, mu: DiscreteMeasure, simplex: SimplexInstance):
        self.origin, self.E = simplex.affine_frame()
        self.coords = (mu.points - self.origin) @ self.E
        self.weights = mu.weights
        verts = (simplex.vertices - self.origin) @ self.E
        self.simplex = SimplexInstance(verts, simplex.nu_weights)
        self.target = simplex.nu_weights @ verts

    def images(self, w):
        pts, lams = [], []
        for xi in self.coords:
            p, lam = project_to_simplex(xi + w, self.simplex)
            pts.append(p)
            lams.append(lam)
        return np.array(pts), np.array(lams)

    def residual(self, w):
        pts, lams = self.images(w)
        return self.weights @ pts - self.target, lams

    def potential(self, w):
        """Convex function whose gradient is the residual."""
        total = 0.0
        for xi, wi in zip(self.coords, self.weights):
            z = xi + w
            dist2, _ = _distance_sq(z, self.simplex)
            total += wi * 0.5 * (z @ z - dist2)
        return total - self.target @ w

    def jacobian(self, lams):
        """Generalised Jacobian: weighted projectors onto the active faces."""
        k = self.E.shape[1]
        J = np.zeros((k, k))
        V = self.simplex.vertices
        for wi, lam in zip(self.weights, lams):
            face = np.flatnonzero(lam > 1e-12)
            if face.size < 2:
                continue
            D = (V[face[1:]] - V[face[0]]).T
            Q, _ = np.linalg.qr(D)
            J += wi * Q @ Q.T
        return J


def find_translation(mu: DiscreteMeasure, simplex: SimplexInstance, tol: float = 1e-8,
                     max_iter: int = 2000) -> np.ndarray:
    """Translation ``v`` with ``barycenter(proj_Delta(. + v) # mu) == barycenter(nu)``.

    A damped fixed-point iteration ``v <- v + (y_nu - Phi(v)) / 2`` runs first;
    if it stalls, a semismooth Newton method with backtracking on the convex
    potential of ``Phi`` takes over.  ``v`` lies in the direction space of the
    simplex and is not unique in general.

    Raises
    ------
    BarycenterOnBoundary
        The barycenter of ``nu`` is not in the relative interior of the simplex.
    NoConvergence
        The iteration budget ran out before ``|Phi(v) - y_nu| <= tol``.
    """
    if mu.dim != simplex.dim:
        raise DimensionMismatch(f"mu has dim {mu.dim}, simplex has dim {simplex.dim}")
    if simplex.nu_weights.min() <= 1e-12:
        raise BarycenterOnBoundary("barycenter of nu lies on the relative boundary")
    red = _Reduced(mu, simplex)
    k = red.E.shape[1]
    if k == 0:
        return np.zeros(simplex.dim)

    w = np.zeros(k)
    res, lams = red.residual(w)
    norm = np.linalg.norm(res)
    history = [norm]
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        stalled = len(history) > 20 and norm > 0.5 * history[-20]
        if not stalled:
            w = w - 0.5 * res
        else:
            J = red.jacobian(lams)
            step = -np.linalg.lstsq(J + 1e-12 * np.eye(k), res, rcond=None)[0]
            if np.linalg.norm(step) == 0.0 or not np.all(np.isfinite(step)):
                step = -res
            base = red.potential(w)
            slope = float(res @ step)
            t = 1.0
            while t > 1e-12 and red.potential(w + t * step) > base + 1e-4 * t * slope:
                t *= 0.5
            w = w + t * step
        res, lams = red.residual(w)
        norm = np.linalg.norm(res)
        history.append(norm)
    if norm > tol:
        raise NoConvergence(f"translation search stopped at residual {norm:.3e}")
    return red.E @ w


def transport_map(x, v, simplex: SimplexInstance) -> np.ndarray:
    """``T(x) = proj_Delta(x + v)``."""
    p, _ = project_to_simplex(np.asarray(x, dtype=float) + v, simplex)
    return p


def phi(x, v, simplex: SimplexInstance) -> float:
    z = np.asarray(x, dtype=float) + v
    dist2, _ = _distance_sq(z, simplex)
    return 0.5 * float(z @ z) - 0.5 * dist2


def _fd_gradient(fn, x, h):
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


@dataclass
class SimplexProjection:
    projection: Projection
    value: float
    translation: np.ndarray
    phi_values: np.ndarray
    gradient_error: float


def simplex_projection_measure(mu: DiscreteMeasure, simplex: SimplexInstance, tol: float = 1e-8,
                               merge_eps: float | None = None) -> SimplexProjection:
    """Projection of ``mu`` on the convex-order ball of a simplex-supported ``nu``.

    Also evaluates ``phi`` at the atoms and checks by central differences that
    ``T`` is its gradient; a mismatch above ``1e-5 * scale`` raises
    :class:`NoConvergence`.
    """
    v = find_translation(mu, simplex, tol=tol)
    images = np.array([transport_map(x, v, simplex) for x in mu.points])
    disp = images - mu.points
    value = math.fsum(mu.weights * (disp * disp).sum(axis=1))

    scale = 1.0 + np.abs(mu.points).max() + np.abs(simplex.vertices).max()
    h = 1e-5 * scale
    phis = np.array([phi(x, v, simplex) for x in mu.points])
    err = 0.0
    for x, t in zip(mu.points, images):
        g = _fd_gradient(lambda z: phi(z, v, simplex), x.astype(float), h)
        err = max(err, float(np.abs(g - t).max()))
    if err > 1e-5 * scale:
        raise NoConvergence(f"finite-difference gradient of phi misses T by {err:.3e}")

    if merge_eps is None:
        verts = simplex.vertices
        diam = max((np.linalg.norm(a - b) for a in verts for b in verts), default=0.0)
        merge_eps = 1e-7 * (1.0 + diam)
    measure, labels = merge_close_atoms(images, mu.weights, merge_eps)
    proj = Projection(measure, mu, images, labels)
    return SimplexProjection(proj, value, v, phis, err)


def barycenter_mismatch(mu: DiscreteMeasure, simplex: SimplexInstance, v) -> float:
    images = np.array([transport_map(x, v, simplex) for x in mu.points])
    return float(np.linalg.norm(mu.weights @ images - simplex.barycenter()))

