import itertools

import numpy as np
import pytest

from barycentric_ot._qp import objective, simplex_qp


def brute_force(M, g):
    """Minimum over every face of the simplex by solving its KKT system."""
    k = len(g)
    best = np.inf
    for r in range(1, k + 1):
        for face in itertools.combinations(range(k), r):
            idx = list(face)
            K = np.zeros((r + 1, r + 1))
            K[:r, :r] = M[np.ix_(idx, idx)]
            K[:r, r] = 1.0
            K[r, :r] = 1.0
            rhs = np.concatenate([g[idx], [1.0]])
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            lam = np.zeros(k)
            lam[idx] = sol[:r]
            if lam.min() < -1e-12 or abs(lam.sum() - 1) > 1e-9:
                continue
            best = min(best, objective(M, g, lam))
    return best


@pytest.mark.parametrize("seed", range(60))
def test_simplex_qp_matches_face_enumeration(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 6))
    r = int(rng.integers(1, k + 1))  # rank-deficient on purpose
    B = rng.normal(size=(r, k))
    M = B.T @ B
    g = rng.normal(size=k)
    lam = simplex_qp(M, g)
    assert lam.min() >= 0.0 and abs(lam.sum() - 1.0) <= 1e-12
    assert objective(M, g, lam) <= brute_force(M, g) + 1e-10


def test_simplex_qp_vertex_answer():
    M = np.eye(3)
    g = np.array([10.0, 0.0, 0.0])
    assert np.allclose(simplex_qp(M, g), [1.0, 0.0, 0.0])
