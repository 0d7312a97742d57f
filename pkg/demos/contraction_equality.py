"""When nu is the image of mu under the gradient of a convex function with a
1-Lipschitz gradient, the projection is nu itself and W2^2 equals the weak cost.
An expanding map breaks the equality.
"""

import numpy as np

from barycentric_ot import check_equality_w2_t2, validate_measure
from barycentric_ot.measures import pushforward

rng = np.random.default_rng(5)
mu = validate_measure(rng.normal(size=(6, 2)), rng.dirichlet(np.ones(6)))

for label, A in [("contraction", np.diag([0.9, 0.3])), ("expansion", np.diag([2.5, 0.5]))]:
    nu = pushforward(mu, lambda x: x @ A.T + 1.0)
    rep = check_equality_w2_t2(mu, nu)
    line = f"{label:12s} W2^2={rep.w2_squared:.6f}  T2={rep.t2:.6f}  equal={rep.passed}"
    if rep.w2_mu_bar_nu is not None:  # only computed once the values agree
        line += f"  W2(mu_bar, nu)={rep.w2_mu_bar_nu:.2e}"
    print(line)
