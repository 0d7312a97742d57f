"""Projecting a measure onto the convex-order ball of a target.

Two atoms at 0 and 1 are pulled toward the wider target {0, 2}.  The solver
returns the optimal plan, the barycenter map and the projected measure.
"""

import numpy as np

from barycentric_ot import extract_projection, solve_barycentric, validate_measure, w2_squared

mu = validate_measure([[0.0], [1.0]], [0.5, 0.5])
nu = validate_measure([[0.0], [2.0]], [0.5, 0.5])

sol = solve_barycentric(mu, nu)
print("weak cost     :", sol.value)
print("plan          :\n", sol.plan.matrix)
print("barycenters   :", sol.barycenters[:, 0])

proj = extract_projection(sol)
print("projection    :", proj.measure.points[:, 0], "weights", proj.measure.weights)

# the weak cost is the squared W2 distance from mu to its projection
print("W2^2(mu, mu_bar):", w2_squared(mu, proj.measure)[0])
print("W2^2(mu, nu)    :", w2_squared(mu, nu)[0])

# a random 2D instance
rng = np.random.default_rng(1)
mu2 = validate_measure(rng.normal(size=(5, 2)), rng.dirichlet(np.ones(5)))
nu2 = validate_measure(2.0 * rng.normal(size=(6, 2)), rng.dirichlet(np.ones(6)))
sol2 = solve_barycentric(mu2, nu2)
print("2D value", sol2.value, "after", sol2.iterations, "iterations, gap", sol2.fw_gap)
