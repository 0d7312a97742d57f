"""Dense simplex method and the discrete transport problem.

:func:`solve_lp` is a textbook two-phase tableau simplex with Dantzig pricing.
Transport LPs are very degenerate, so after ``BLAND_AFTER`` degenerate pivots
pricing switches to Bland's rule for the remainder of the solve.

:class:`TransportSolver` specialises the method to the transport polytope: it
starts from a north-west-corner basis (no phase 1) and keeps its last optimal
basis, so repeated solves with new costs over the same marginals, as in a
Frank-Wolfe loop, only pay for the extra pivots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IterationLimit, NumericBreakdown
from .measures import DiscreteMeasure, second_moment

BLAND_AFTER = 1000
PIVOT_TOL = 1e-11


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    value: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class TransportPlan:
    """Coupling of ``row_measure`` and ``col_measure`` stored as an (n, m) matrix."""

    row_measure: DiscreteMeasure
    col_measure: DiscreteMeasure
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        shape = (self.row_measure.n, self.col_measure.n)
        if self.matrix.shape != shape:
            raise DimensionMismatch(f"plan has shape {self.matrix.shape}, expected {shape}")

    @property
    def kernel(self) -> np.ndarray:
        """Row-normalised plan: row ``i`` is the conditional law given ``x_i``."""
        return self.matrix / self.row_measure.weights[:, None]

    def barycenters(self) -> np.ndarray:
        """Conditional means ``sum_j p_ij y_j`` for every row atom."""
        return self.kernel @ self.col_measure.points

    def marginal_residual(self) -> float:
        r = np.abs(self.matrix.sum(axis=1) - self.row_measure.weights).max()
        c = np.abs(self.matrix.sum(axis=0) - self.col_measure.weights).max()
        return float(max(r, c))

    def cost(self, cost_matrix) -> float:
        return float(np.sum(np.asarray(cost_matrix) * self.matrix))

    def support(self, rel_eps: float = 1e-10) -> list[np.ndarray]:
        """Column indices carrying mass above ``rel_eps * mu_i`` in each row."""
        thresh = rel_eps * self.row_measure.weights
        return [np.flatnonzero(row > t) for row, t in zip(self.matrix, thresh)]

    def to_dict(self) -> dict:
        return {
            "rows": self.row_measure.to_dict(),
            "cols": self.col_measure.to_dict(),
            "matrix": self.matrix.tolist(),
        }


# ---------------------------------------------------------------------------
# tableau machinery


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _iterate(T, basis, enterable, max_iter, tol=1e-10):
    """Run primal simplex pivots on ``T`` in place.

    The last row of ``T`` holds reduced costs, the last column the basic values.
    Returns ``(status, pivots)`` with status "optimal", "unbounded" or "limit".
    """
    m = T.shape[0] - 1
    degenerate = 0
    bland = False
    for it in range(max_iter):
        red = T[-1, :-1]
        candidates = np.flatnonzero((red < -tol) & enterable)
        if candidates.size == 0:
            return "optimal", it
        if bland:
            col = candidates[0]
        else:
            col = candidates[np.argmin(red[candidates])]
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        if bland:
            row = ties[np.argmin(basis[ties])]
        else:
            row = ties[np.argmax(column[ties])]
        if best <= 1e-14:
            degenerate += 1
            if degenerate >= BLAND_AFTER:
                bland = True
        _pivot(T, row, col)
        basis[row] = col
    return "limit", max_iter


def _basic_solution(A, b, c, basis):
    """Recompute primal and dual values from the basis columns directly."""
    B = A[:, basis]
    try:
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError:
        raise NumericBreakdown("basis matrix became singular") from None
    x = np.zeros(A.shape[1])
    x[basis] = xb
    return x, y


def _parse_bounds(bounds, n):
    if bounds is None:
        return np.zeros(n), np.full(n, math.inf)
    bounds = list(bounds)
    if len(bounds) == 2 and all(b is None or np.isscalar(b) for b in bounds):
        bounds = [tuple(bounds)] * n
    if len(bounds) != n:
        raise DimensionMismatch("one bound pair per variable is required")
    lb = np.array([-math.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    ub = np.array([math.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    return lb, ub


def _standard_form(c, A_eq, b_eq, bounds):
    """Map ``min c.x, A x = b, lb <= x <= ub`` onto ``z >= 0`` form.

    Returns the standard-form data and a function recovering x from z, or
    None when some lower bound exceeds its upper bound.
    """
    n = c.size
    lb, ub = _parse_bounds(bounds, n)
    if np.any(lb > ub):
        return None

    shift = np.zeros(n)
    cols = []  # (original index, sign)
    upper_rows = []  # (standard column, width)
    for j in range(n):
        if math.isfinite(lb[j]):
            shift[j] = lb[j]
            cols.append((j, 1.0))
            if math.isfinite(ub[j]):
                upper_rows.append((len(cols) - 1, ub[j] - lb[j]))
        elif math.isfinite(ub[j]):
            shift[j] = ub[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols) + len(upper_rows)
    m0 = A_eq.shape[0]
    A = np.zeros((m0 + len(upper_rows), nz))
    b = np.zeros(m0 + len(upper_rows))
    cz = np.zeros(nz)
    b[:m0] = b_eq - A_eq @ shift
    for k, (j, sign) in enumerate(cols):
        A[:m0, k] = sign * A_eq[:, j]
        cz[k] = sign * c[j]
    for r, (k, width) in enumerate(upper_rows):
        A[m0 + r, k] = 1.0
        A[m0 + r, len(cols) + r] = 1.0
        b[m0 + r] = width

    def recover(z):
        x = shift.copy()
        for k, (j, sign) in enumerate(cols):
            x[j] += sign * z[k]
        return x

    return A, b, cz, recover, m0


def solve_lp(c, A_eq=None, b_eq=None, bounds=None, max_iter=50_000, feas_tol=1e-9) -> LpSolution:
    """Minimise ``c @ x`` subject to ``A_eq @ x == b_eq`` and variable bounds.

    Parameters
    ----------
    c : array_like, shape (n,)
    A_eq : array_like, shape (k, n), optional
    b_eq : array_like, shape (k,), optional
    bounds : sequence of (lb, ub) pairs or a single pair, optional
        ``None`` or ``inf`` entries mean unbounded on that side.  Defaults to
        ``x >= 0``.
    feas_tol : float
        Phase-one objective (scaled by ``1 + sum |b|``) counted as feasible.

    Returns
    -------
    LpSolution
        ``duals`` holds one multiplier per equality row, so that
        ``c - A_eq.T @ duals`` are the reduced costs at the optimum.

    Raises
    ------
    NumericBreakdown, IterationLimit
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    if A_eq is None:
        A_eq = np.zeros((0, n))
        b_eq = np.zeros(0)
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    if A_eq.shape[1] != n or A_eq.shape[0] != b_eq.size:
        raise DimensionMismatch("inconsistent LP dimensions")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A_eq)) and np.all(np.isfinite(b_eq))):
        raise NumericBreakdown("LP data must be finite")

    sf = _standard_form(c, A_eq, b_eq, bounds)
    if sf is None:
        return LpSolution(LpStatus.INFEASIBLE)
    A, b, cz, recover, m0 = sf
    m, nz = A.shape

    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # phase 1 on [A | I]
    T = np.zeros((m + 1, nz + m + 1))
    T[:m, :nz] = A
    T[:m, nz : nz + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :nz] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(nz, nz + m)
    enterable = np.zeros(nz + m, dtype=bool)
    enterable[:nz] = True

    total = 0
    if m:
        status, its = _iterate(T, basis, enterable, max_iter)
        total += its
        if status == "limit":
            raise IterationLimit("phase one exceeded the iteration budget")
        if -T[-1, -1] > feas_tol * (1.0 + np.abs(b).sum()):
            return LpSolution(LpStatus.INFEASIBLE, iterations=total)
        # drive zero-level artificials out where a structural pivot exists
        for r in range(m):
            if basis[r] >= nz:
                row = T[r, :nz]
                k = np.flatnonzero(np.abs(row) > 1e-9)
                if k.size:
                    j = k[np.argmax(np.abs(row[k]))]
                    _pivot(T, r, j)
                    basis[r] = j

    # phase 2: artificials that remain basic sit on redundant rows at zero
    cost = np.concatenate([cz, np.zeros(m)])
    T[-1, :-1] = cost - cost[basis] @ T[:m, :-1]
    T[-1, -1] = -cost[basis] @ T[:m, -1]
    status, its = _iterate(T, basis, enterable, max_iter - total)
    total += its
    if status == "limit":
        raise IterationLimit("phase two exceeded the iteration budget")
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=total)

    A_full = np.hstack([A, np.eye(m)])
    z, y = _basic_solution(A_full, b, cost, basis)
    z = z[:nz]
    if z.size and z.min() < -1e-9 * (1.0 + np.abs(b).max(initial=0.0)):
        raise NumericBreakdown("basic solution lost feasibility")
    z = np.maximum(z, 0.0)
    x = recover(z)
    duals = (y * sign)[:m0]
    value = float(c @ x)
    return LpSolution(LpStatus.OPTIMAL, x=x, duals=duals, value=value, iterations=total)


# ---------------------------------------------------------------------------
# transport problems


def transport_constraints(n: int, m: int):
    """Equality rows of the transport polytope: n row sums then m column sums."""
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return A


def _northwest_corner(a, b):
    """Spanning-tree basis of the transport polytope (exactly n + m - 1 cells)."""
    n, m = len(a), len(b)
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    i = j = 0
    cells = []
    while i < n and j < m:
        cells.append(i * m + j)
        t = min(a[i], b[j])
        a[i] -= t
        b[j] -= t
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return cells


class TransportSolver:
    """Exact LP solver for transport problems with fixed marginals.

    The constraint system drops the last column-sum row (it is implied by the
    others), which pins the column potential ``v_m`` to zero.  One instance
    keeps mutable tableau state; do not share an instance across threads.
    """

    def __init__(self, mu: DiscreteMeasure, nu: DiscreteMeasure, max_iter: int = 100_000):
        self.mu, self.nu = mu, nu
        self.n, self.m = mu.n, nu.n
        self.max_iter = max_iter
        A = transport_constraints(self.n, self.m)
        self.A = A[:-1]
        self.b = np.concatenate([mu.weights, nu.weights])[:-1]
        self.basis = np.array(_northwest_corner(mu.weights, nu.weights))
        self._T = None

    def _fresh_tableau(self, basis):
        B = self.A[:, basis]
        try:
            body = np.linalg.solve(B, np.column_stack([self.A, self.b]))
        except np.linalg.LinAlgError:
            raise NumericBreakdown("transport basis is singular") from None
        rhs = body[:, -1]
        if rhs.min() < -1e-9:
            raise NumericBreakdown("transport basis is infeasible")
        body[:, -1] = np.maximum(rhs, 0.0)
        T = np.zeros((body.shape[0] + 1, body.shape[1]))
        T[:-1] = body
        return T

    def solve(self, C):
        """Return ``(plan_matrix, value, u, v)`` for the cost matrix ``C``."""
        C = np.asarray(C, dtype=float)
        if C.shape != (self.n, self.m):
            raise DimensionMismatch(f"cost has shape {C.shape}, expected {(self.n, self.m)}")
        if not np.all(np.isfinite(C)):
            raise NumericBreakdown("cost matrix must be finite")
        try:
            return self._solve(C)
        except NumericBreakdown:
            # restart from a clean north-west-corner basis once
            self.basis = np.array(_northwest_corner(self.mu.weights, self.nu.weights))
            self._T = None
            return self._solve(C)

    def _solve(self, C):
        cost = C.reshape(-1)
        if self._T is None:
            self._T = self._fresh_tableau(self.basis)
        T = self._T
        k = T.shape[0] - 1
        T[-1, :-1] = cost - cost[self.basis] @ T[:k, :-1]
        T[-1, -1] = -cost[self.basis] @ T[:k, -1]
        scale = 1.0 + np.abs(cost).max()
        enterable = np.ones(T.shape[1] - 1, dtype=bool)
        status, _ = _iterate(T, self.basis, enterable, self.max_iter, tol=1e-12 * scale)
        if status == "limit":
            raise IterationLimit("transport simplex exceeded the iteration budget")
        if status == "unbounded":  # impossible on a bounded polytope
            raise NumericBreakdown("transport LP reported unbounded")

        x, y = _basic_solution(self.A, self.b, cost, self.basis)
        if x.min() < -1e-9:
            raise NumericBreakdown("transport solution lost feasibility")
        x = np.maximum(x, 0.0)
        # rebuild the working tableau from the basis so round-off cannot accumulate
        self._T = self._fresh_tableau(self.basis)
        plan = x.reshape(self.n, self.m)
        u = y[: self.n].copy()
        v = np.concatenate([y[self.n :], [0.0]])
        value = float(np.sum(C * plan))
        return plan, value, u, v


def solve_transport(C, mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Solve ``min <C, pi>`` over couplings of ``mu`` and ``nu``.

    Returns ``(plan, value, u, v)`` where ``plan`` is a vertex of the
    transport polytope and ``u_i + v_j <= C_ij`` with equality on the support
    of the plan; potentials are normalised by ``v[-1] == 0``.
    """
    matrix, value, u, v = TransportSolver(mu, nu).solve(C)
    return TransportPlan(mu, nu, matrix), value, u, v


def squared_distances(X, Y) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)


def w2_squared_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Squared W2 on the line through the monotone (quantile) coupling.

    Walks the two sorted CDFs and charges each matched slice of mass with its
    squared displacement.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionMismatch("quantile coupling needs one-dimensional measures")
    ia = np.argsort(mu.points[:, 0], kind="stable")
    ib = np.argsort(nu.points[:, 0], kind="stable")
    xa, wa = mu.points[ia, 0], mu.weights[ia].copy()
    xb, wb = nu.points[ib, 0], nu.weights[ib].copy()
    i = j = 0
    terms = []
    while i < len(xa) and j < len(xb):
        t = min(wa[i], wb[j])
        terms.append(t * (xa[i] - xb[j]) ** 2)
        wa[i] -= t
        wb[j] -= t
        # the last atom on each side absorbs round-off in the remaining mass
        if wa[i] <= wb[j] and i < len(xa) - 1:
            i += 1
        elif j < len(xb) - 1:
            j += 1
        else:
            i += 1
    return math.fsum(terms)


def w2_squared(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Exact squared 2-Wasserstein distance.

    Returns ``(value, plan, (u, v))``.  On the line the LP value is checked
    against the quantile coupling and a mismatch above ``1e-9 (1 + value)``
    raises :class:`NumericBreakdown`.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dimensions differ: {mu.dim} vs {nu.dim}")
    C = squared_distances(mu.points, nu.points)
    plan, value, u, v = solve_transport(C, mu, nu)
    value = max(value, 0.0)
    if mu.dim == 1:
        q = w2_squared_1d(mu, nu)
        if abs(q - value) > 1e-9 * (1.0 + value):
            raise NumericBreakdown(f"LP value {value!r} disagrees with quantile coupling {q!r}")
    return value, plan, (u, v)


def transport_scale(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return 1.0 + second_moment(mu) + second_moment(nu)
