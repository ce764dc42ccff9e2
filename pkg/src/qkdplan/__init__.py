"""Deployment-cost planning for trusted-repeater QKD networks.

Models the per-bit cost of carrying secret key across a region under four
architectures (a single repeater chain, all-pairs planar chains, a square
trunk grid, and a stochastic Poisson-Voronoi backbone), locates each
architecture's optimal spacing, and compares them.  Every analytic
constant is backed by an independent numerical route: quadrature against
closed forms, Monte-Carlo geometry against both.
"""

from .chain import (
    ChainScenario,
    EqualSpacingReport,
    chain_optimal_spacing,
    chain_total_cost,
    deployment_counts,
    equal_spacing_is_optimal,
)
from .config import McSettings, ScenarioConfig, emit_config, load_config, parse_config
from .errors import (
    ConfigError,
    InfeasibleDistanceError,
    NumericalFailureError,
    QkdPlanError,
    UnsupportedModelError,
)
from .geometry import (
    MarkovPath,
    PointSet,
    dump_geometry,
    estimate_kappa_bb_mc,
    estimate_kappa_loc_mc,
    markov_path,
    nearest_node,
    sample_poisson,
)
from .linkmodel import (
    AttenuationSpec,
    ConcavityReport,
    CostParams,
    LinkModel,
    binary_entropy,
    check_log_concavity,
    cost_fn,
    drop_distance,
    lambda_from_attenuation,
    per_bit_cost,
    rate,
)
from .numerics import DEFAULT_TOL, Tolerance, erf, fixed_point, integrate_1d, minimize_1d
from .planar import (
    PlanarScenario,
    delta_analytic,
    delta_monte_carlo,
    gamma_constant,
    planar_chain_total_cost,
)
from .planner import (
    ConditionReport,
    Recommendation,
    critical_density,
    minimum_user_count,
    necessary_condition,
    recommend,
)
from .square import (
    CostBreakdown,
    SquareBackboneScenario,
    manhattan_hop_sum,
    mean_cell_access_cost,
    square_backbone_cost,
    square_optimal_cell,
)
from .stats import McEstimate
from .stochastic import (
    StochasticBackboneScenario,
    kappa_bb_closed_form,
    kappa_bb_quadrature,
    kappa_bb_single_integral,
    kappa_loc,
    optimal_alpha_bb,
    optimal_scale_ratio,
    stochastic_backbone_cost,
)

__version__ = "0.1.0"
