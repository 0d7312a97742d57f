"""A dual potential that certifies the weak cost from below."""

import numpy as np

from barycentric_ot import build_dual_potential, certificate, solve_barycentric, validate_measure

rng = np.random.default_rng(3)
mu = validate_measure(rng.normal(size=(4, 2)), rng.dirichlet(np.ones(4)))
nu = validate_measure(2.0 * rng.normal(size=(4, 2)), rng.dirichlet(np.ones(4)))

sol = solve_barycentric(mu, nu)
f = build_dual_potential(sol)
cert = certificate(sol, f)

print("max-affine pieces:", len(f))
print("primal", cert["primal"], "dual", cert["dual"], "gap", cert["gap"])
print("certified:", cert["certified"])

# piece i is active at the barycenter b_i
print("active pieces at b_i:", f.active_piece(sol.barycenters))
