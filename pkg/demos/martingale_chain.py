"""Composing the barycenter map with a martingale kernel from the projection
to nu gives a coupling of mu and nu whose kernels have the right barycenters.
"""

import numpy as np

from barycentric_ot import build_martingale_coupling, compose_chain, extract_projection, solve_barycentric
from barycentric_ot import validate_measure

rng = np.random.default_rng(6)
mu = validate_measure(rng.normal(size=(4, 2)), rng.dirichlet(np.ones(4)))
nu = validate_measure(2.0 * rng.normal(size=(5, 2)), rng.dirichlet(np.ones(5)))

sol = solve_barycentric(mu, nu)
proj = extract_projection(sol)
kernel = build_martingale_coupling(proj.measure, nu)
chain = compose_chain(mu, proj.map_points, kernel, proj.assignment)

print("row sums - mu   :", np.abs(chain.matrix.sum(axis=1) - mu.weights).max())
print("col sums - nu   :", np.abs(chain.matrix.sum(axis=0) - nu.weights).max())
print("barycenter error:", np.abs(chain.barycenters() - sol.barycenters).max())
