"""Convex optimization by weighted no-regret dynamics on the Fenchel game.

Minimizing a smooth convex f is recast as the zero-sum game with payoff
g(x, y) = <x, y> - f*(y). Pairing learners for the two players recovers
Nesterov's accelerated method, heavy ball, accelerated proximal and
Frank-Wolfe variants, and every run carries regret certificates that
bound its duality gap.
"""

from .audit import (
    Certificate,
    certify_accelerated_bound,
    certify_all,
    certify_btrl_regret,
    certify_equilibrium_gap,
    certify_ftl_regret,
    certify_mirror_descent_regret,
    certify_optimistic_regret,
    certify_rate_bound,
    certify_strongly_convex_btl_regret,
    regret_x,
    regret_y,
)
from .classical import (
    check_equivalence,
    heavy_ball_run,
    nesterov83_run,
    nesterov_1mem_run,
    nesterov_infmem_run,
    accel_fw_run,
    accel_prox_run,
)
from .cli import fit_rate_slope
from .core import (
    BregmanGeometry,
    FeasibleSet,
    GameTrace,
    Objective,
    WeightSchedule,
    conjugate_at_gradient,
    entropy_geometry,
    euclidean_geometry,
    make_schedule,
    payoff,
    update_averages,
    weighted_euclidean_geometry,
)
from .engine import GameSpec, duality_gap_of, reference_minimizer, run_game, run_linear_rate_game
from .errors import (
    ConjugateUnavailable,
    DegenerateFit,
    FenchelGameError,
    InvalidKappa,
    InvalidSpec,
    MissingOracle,
    NoReferenceMinimizer,
    NonFiniteIterate,
    ProjectionFailure,
    ProxUnavailable,
    RequiresStrongConvexity,
    UnsupportedGeometry,
)
from .learners import (
    ConstantGamma,
    L1Term,
    LearnerConfig,
    Nesterov83Gamma,
    ZeroTerm,
    corollary_gamma,
    gauge_squared,
    half_squared_norm,
)
from .problems import (
    ProblemInstance,
    get_problem,
    make_ball_quadratic,
    make_ball_set,
    make_l1_composite,
    make_logsumexp,
    make_quadratic,
)
from .sets import nonnegative_orthant, simplex, unconstrained

__version__ = "0.1.0"
