"""Penalized solver and free-boundary analysis for the coupled system

    Δ∞u ≤ f,  Δv ≤ g,  Δ∞u = f on {v > 0},  Δv = g on {u > 0},

with u, v ≥ 0 on the box [-1, 1]^n, n ∈ {1, 2}.
"""
from .analysis import (
    box_dimension,
    comparison_experiment,
    density_profile,
    dyadic_radii,
    growth_exponent,
    nondegeneracy_profile,
    porosity_estimate,
)
from .config import parse_config
from .coupled import (
    CoupledParams,
    PenalizationSchedule,
    ProblemSpec,
    SolutionPair,
    beta_eps,
    solve_coupled,
    solve_penalized,
    t_map,
)
from .errors import *  # noqa: F401,F403
from .exact import (
    example_halfspace,
    example_radial,
    example_shifted_paraboloid,
    example_uncoupled,
    verify_example,
)
from .expr import eval_expression, parse_expression
from .free_boundary import (
    check_inclusions,
    classify_blowup,
    extract_fb,
    positivity_set,
    snap_to_zero_set,
    uncoupled_set,
)
from .grid import (
    Grid,
    ScalarField,
    gradient_at,
    hessian_at,
    intrinsic_norm,
    make_grid,
    sample,
    sup_on_ball,
    unit_box,
)
from .infinity import InfinitySolveParams, infinity_residual, solve_infinity_poisson
from .laplace import PoissonParams, PsorParams, laplacian_residual, solve_obstacle_psor, solve_poisson

__version__ = "0.1.0"
