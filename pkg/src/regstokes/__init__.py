"""Regularised stokeslet solvers for zero-Reynolds-number flow.

Three interchangeable strategies for the resistance and mobility problems:
single-width Nystrom collocation, Nystrom plus Richardson extrapolation in the
regularisation width, and a two-grid nearest-neighbour discretisation, with a
benchmark harness for convergence sweeps.
"""

from .core import (
    FactoredSystem,
    GrandResistanceMatrix,
    MobilityResult,
    StokesSystem,
    TractionSolution,
    analytic_sphere_grm,
    analytic_spheroid_grm,
    assemble_mobility,
    assemble_nystrom,
    evaluate_flow,
    grand_resistance,
    relative_error_2norm,
    solve_mobility,
    solve_resistance,
)
from .geometry import (
    NearestPair,
    SurfaceDiscretisation,
    discretise_sphere,
    discretise_spheroid,
    discretise_torus,
    make_nearest_pair,
    min_spacing,
)
from .kernels import RegParam, blob, reg_pressure, reg_stokeslet, singular_stokeslet
from .nearest import NearestMap, assemble_nearest, build_nearest_map
from .richardson import (
    DEFAULT_RULE,
    RULE_VARIANTS,
    ExtrapolationRule,
    extrapolate,
    extrapolation_weights,
    nyr_grand_resistance,
    nyr_mobility,
)

__version__ = "0.1.0"
