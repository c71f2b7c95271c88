"""Structure-preserving Willmore and Helfrich flow on closed polygonal curves.

The flows dissipate the discrete bending energy exactly per step (to the
nonlinear-solver tolerance), and the Helfrich flow additionally conserves
the discrete length and enclosed area, by construction of two-point discrete
variational derivatives and per-step Lagrange multipliers.
"""

from .driver import (
    GammaStudyRow,
    RunConfig,
    StepDiagnostics,
    TimeSeries,
    gamma_study,
    relocate,
    run,
    step,
)
from .geometry import (
    FlowParams,
    GeometricCache,
    PolygonalCurve,
    discrete_curvature,
    discrete_inner_product,
    edge_quantities,
    functionals,
    mesh_ratio,
    periodic_difference,
    polygon_area,
    tangential_velocity,
    vertex_tangents,
)
from .gradients import (
    BendingIntermediates,
    CurvePair,
    GradientField,
    chain_rule_residual,
    grad_area,
    grad_bending,
    grad_length,
)
from .kernels import BACKEND, HAVE_COMPILED
from .schemes import (
    FrozenExplicitData,
    HelfrichUnknowns,
    WillmoreUnknowns,
    gram_ratio,
    helfrich_residual,
    relocation_residual,
    willmore_residual,
)
from .solver import ResidualSystem, SolverConfig, SolverReport, lu_solve, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BendingIntermediates",
    "CurvePair",
    "FlowParams",
    "FrozenExplicitData",
    "GammaStudyRow",
    "GeometricCache",
    "GradientField",
    "HAVE_COMPILED",
    "HelfrichUnknowns",
    "PolygonalCurve",
    "ResidualSystem",
    "RunConfig",
    "SolverConfig",
    "SolverReport",
    "StepDiagnostics",
    "TimeSeries",
    "WillmoreUnknowns",
    "chain_rule_residual",
    "discrete_curvature",
    "discrete_inner_product",
    "edge_quantities",
    "functionals",
    "gamma_study",
    "grad_area",
    "grad_bending",
    "grad_length",
    "gram_ratio",
    "helfrich_residual",
    "lu_solve",
    "mesh_ratio",
    "periodic_difference",
    "polygon_area",
    "relocate",
    "relocation_residual",
    "run",
    "solve",
    "step",
    "tangential_velocity",
    "vertex_tangents",
    "willmore_residual",
]
