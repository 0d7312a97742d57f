"""Barycentric weak optimal transport between finitely supported measures.

The central object is the cost

    T2bar(nu | mu) = min over couplings pi of sum_i mu_i |b_i - x_i|^2,

where ``b_i`` is the barycenter of the kernel of ``pi`` at ``x_i``.  Its
minimiser yields the W2-projection ``mu_bar`` of ``mu`` onto the set of
measures dominated by ``nu`` in convex order, together with a
1-Lipschitz monotone map ``x_i -> b_i`` and a martingale coupling of
``mu_bar`` and ``nu``.
"""

from .analysis import (
    CheckReport,
    check_c2_monotonicity,
    check_equality_w2_t2,
    check_map_regularity,
    check_submartingale_1d,
)
from .costs import (
    LambdaReduction,
    barycentric_cost,
    brute_force_weak_cost,
    c_lambda,
    reduce_lambda,
    solve_lambda,
)
from .dual import MaxAffineFunction, build_dual_potential, certificate, conjugate_at, duality_gap, q2_at
from .errors import *  # noqa: F401,F403
from .linprog import LpStatus, TransportPlan, solve_lp, solve_transport, w2_squared
from .measures import DiscreteMeasure, read_measure, validate_measure
from .order import (
    OrderCertificate,
    build_martingale_coupling,
    check_convex_order,
    check_icx_order_1d,
    check_stochastic_order_1d,
    compose_chain,
)
from .simplex import SimplexInstance, find_translation, simplex_projection_measure
from .wot import Projection, WotSolution, extract_projection, solve_barycentric

__version__ = "0.1.0"
