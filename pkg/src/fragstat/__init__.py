"""Stationary size distributions of fragmentation with size diffusion.

The package computes, verifies, and analyzes nonnegative stationary
profiles of the fragmentation equation with a second-derivative size
diffusion term: closed forms for power-law coefficients, a truncated
finite-difference solver for the general admissible family, moment and
identity diagnostics, and asymptotic-law fitting at both ends of the
size axis.
"""

from .asymptotics import (
    RegimePrediction,
    SmallSizeReport,
    TailFitReport,
    limit_slope,
    moment_membership,
    rate_mass_moment,
    small_classify,
    small_fit,
    small_report,
    small_shape,
    tail_bounds_check,
    tail_fit,
    tail_report,
)
from .closed_form import (
    ClosedFormSolution,
    closed_form_eval,
    large_size_asymptote,
    normalize,
    p_transform_check,
    small_size_asymptote,
)
from .diagnostics import (
    IdentityReport,
    MomentEstimate,
    ShapeReport,
    identity_residual,
    identity_transform,
    inverse_moment_check,
    moment,
    shape_checks,
    small_limit,
)
from .errors import (
    AssemblyError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    FragstatError,
    IllConditionedError,
    NumericalError,
    PreconditionError,
    SpecFileError,
    UnsupportedOperationError,
)
from .grids import Grid, build_nodes, trapezoid_weights
from .kernels import (
    AssumptionReport,
    CoefficientSpec,
    DaughterSpec,
    RateSpec,
    check_assumptions,
    delta_m,
    rate_eval,
)
from .solver import (
    SizeDistribution,
    SolverConfig,
    build_grid,
    residual,
    solve_conservative,
    solve_nullspace,
)
from .specfile import build_spec, load_spec, parse_overrides, spec_fields

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "AssumptionReport",
    "ClosedFormSolution",
    "CoefficientSpec",
    "ConvergenceError",
    "DaughterSpec",
    "DegeneracyError",
    "DomainError",
    "FragstatError",
    "Grid",
    "IdentityReport",
    "IllConditionedError",
    "MomentEstimate",
    "NumericalError",
    "PreconditionError",
    "RateSpec",
    "RegimePrediction",
    "ShapeReport",
    "SizeDistribution",
    "SmallSizeReport",
    "SolverConfig",
    "SpecFileError",
    "TailFitReport",
    "UnsupportedOperationError",
    "__version__",
    "build_grid",
    "build_nodes",
    "build_spec",
    "check_assumptions",
    "closed_form_eval",
    "delta_m",
    "identity_residual",
    "identity_transform",
    "inverse_moment_check",
    "large_size_asymptote",
    "limit_slope",
    "load_spec",
    "moment",
    "moment_membership",
    "normalize",
    "p_transform_check",
    "parse_overrides",
    "rate_eval",
    "rate_mass_moment",
    "residual",
    "shape_checks",
    "small_classify",
    "small_fit",
    "small_limit",
    "small_report",
    "small_shape",
    "small_size_asymptote",
    "solve_conservative",
    "solve_nullspace",
    "spec_fields",
    "tail_bounds_check",
    "tail_fit",
    "tail_report",
    "trapezoid_weights",
]
