"""Active-set solver for convex quadratics over the probability simplex.

Minimises ``0.5 * lam @ M @ lam - g @ lam`` subject to ``lam >= 0`` and
``sum(lam) == 1`` with ``M`` positive semidefinite (possibly singular).  Used
for Euclidean projections onto simplices and for the inf-convolution of
max-affine functions, where ``M`` is a Gram matrix of a handful of vectors.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericBreakdown


def objective(M, g, lam) -> float:
    return float(0.5 * lam @ M @ lam - g @ lam)


def _face_minimizer(M, g, idx):
    """Minimise on the affine hull of face ``idx``.

    Returns ``(lam_face, None)`` for an attained minimum or ``(None, d)`` with a
    descent direction ``d`` along which the face objective is unbounded below.
    """
    k = len(idx)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = M[np.ix_(idx, idx)]
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([g[idx], [1.0]])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    scale = 1.0 + np.abs(rhs).max() + np.abs(K).max()
    if np.abs(K @ sol - rhs).max() <= 1e-10 * scale:
        return sol[:k], None
    # g restricted to the face is not in range: follow its null-space component
    A = np.vstack([M[np.ix_(idx, idx)], np.ones((1, k))])
    _, s, vt = np.linalg.svd(A)
    rank = int((s > 1e-10 * max(1.0, s.max(initial=0.0))).sum())
    null = vt[rank:]
    d = null.T @ (null @ g[idx])
    if np.abs(d).max() <= 1e-14:
        raise NumericBreakdown("active-set QP stalled on a singular face")
    return None, d


def simplex_qp(M, g, start=None, tol=1e-12, max_iter=10_000):
    """Solve the simplex-constrained QP and return the optimal weights.

    Parameters
    ----------
    M : (k, k) positive semidefinite array
    g : (k,) array
    start : (k,) array, optional
        Feasible starting point.  Defaults to the best vertex.
    """
    M = np.asarray(M, dtype=float)
    g = np.asarray(g, dtype=float)
    k = g.size
    if start is None:
        lam = np.zeros(k)
        lam[np.argmin(0.5 * np.diag(M) - g)] = 1.0
    else:
        lam = np.clip(np.asarray(start, dtype=float), 0.0, None)
        lam /= lam.sum()
    active = set(np.flatnonzero(lam > 0).tolist())
    scale = 1.0 + np.abs(M).max() + np.abs(g).max()

    for _ in range(max_iter):
        idx = np.array(sorted(active))
        face, direction = _face_minimizer(M, g, idx)
        if face is not None:
            step = face - lam[idx]
            if face.min() >= -1e-15:
                lam[:] = 0.0
                lam[idx] = np.clip(face, 0.0, None)
                lam /= lam.sum()
                grad = M @ lam - g
                level = grad[idx].mean()
                outside = np.array([j for j in range(k) if j not in active], dtype=int)
                if outside.size == 0:
                    return lam
                slack = grad[outside] - level
                j = int(np.argmin(slack))
                if slack[j] >= -tol * scale:
                    return lam
                active.add(int(outside[j]))
                continue
        else:
            step = direction
        # move until the first weight on the face hits zero
        neg = step < 0
        if not np.any(neg):
            raise NumericBreakdown("active-set QP produced an unbounded step")
        ratios = lam[idx][neg] / -step[neg]
        r = int(np.argmin(ratios))
        t = ratios[r]
        if face is not None:
            t = min(t, 1.0)
        lam[idx] = lam[idx] + t * step
        blocking = idx[neg][r]
        lam[blocking] = 0.0
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum()
        active = set(np.flatnonzero(lam > 0).tolist())
        if not active:
            raise NumericBreakdown("active-set QP lost all weight")
    raise NumericBreakdown("active-set QP did not terminate")
