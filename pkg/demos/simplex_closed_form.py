"""Target supported on the vertices of a triangle: the projection is
proj_Delta(x + v) for one translation v.
"""

import numpy as np

from barycentric_ot import SimplexInstance, extract_projection, simplex_projection_measure, solve_barycentric
from barycentric_ot import w2_squared
from barycentric_ot.measures import uniform

tri = SimplexInstance([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], [0.3, 0.3, 0.4])
rng = np.random.default_rng(2)
mu = uniform(rng.uniform(-1.0, 4.0, size=(15, 2)))

res = simplex_projection_measure(mu, tri)
print("translation v :", res.translation)
print("closed form   :", res.value)
print("grad phi check:", res.gradient_error)

sol = solve_barycentric(mu, tri.measure())
print("Frank-Wolfe   :", sol.value)
print("W2 between projections:", np.sqrt(max(w2_squared(res.projection.measure, extract_projection(sol).measure)[0], 0.0)))
