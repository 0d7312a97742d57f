"""In one dimension, increasing convex order makes the barycenter map push
every atom upward and makes the projection stochastically larger than mu.
"""

import numpy as np

from barycentric_ot import check_icx_order_1d, check_submartingale_1d, solve_barycentric
from barycentric_ot.measures import uniform

x = np.linspace(-1.0, 0.0, 11)
y = np.linspace(0.0, 3.0, 31)
mu, nu = uniform(x[:, None]), uniform(y[:, None])

print("mu <=_icx nu:", check_icx_order_1d(mu, nu).holds)
sol = solve_barycentric(mu, nu)
print("b(x) - x    :", np.round(sol.barycenters[:, 0] - x, 6))

rep = check_submartingale_1d(mu, nu, sol)
print("submartingale checks pass:", rep.passed, "worst violation", rep.worst_violation)
