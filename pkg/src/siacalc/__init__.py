"""Calculus with nilpotent infinitesimals: exact derivatives by coefficient
extraction, integral geometry, and cubical exterior calculus with Stokes checks."""

from .calculus import (
    Antiderivative,
    ConstrainedPoint,
    constrained_stationary,
    constraint_directions,
    derivative,
    find_stationary,
    gradient,
    hessian,
    integrate,
    is_stationary,
    nth_derivative,
    verify_constrained,
)
from .cubes import (
    IDENTITY_CUBES,
    ChainFormal,
    FiniteCube,
    Germ,
    InfinitesimalCube,
    boundary_finite,
    boundary_inf,
    random_germ,
)
from .errors import (
    ConvergenceError,
    DegenerateConstraintError,
    DegenerateParametrizationError,
    DimensionError,
    DomainError,
    ExprSyntaxError,
    ImpureInfinitesimalError,
    NonInvertibleError,
    SIAError,
    SolverError,
    UnboundVariableError,
)
from .expr import Expr, evaluate, format_expr, parse, variables
from .forms import (
    CoordForm,
    eval_form,
    exterior_derivative_coord,
    exterior_derivative_sia,
    form_tilde,
    integrate_form,
    parse_form,
)
from .geometry import (
    CatenaryReport,
    CurveSpec,
    NegativeRadiusWarning,
    arclength,
    area_under_curve,
    catenary_residual,
    cone_partial_surface,
    polar_arclength,
    surface_of_revolution,
    volume_of_revolution,
)
from .nilpotent import MicroVector, MultiDual, microcancel
from .quadrature import QuadratureConfig
from .stokes import FTCReport, ftc_case, verify_generalized_stokes
from .vector import StokesCheck, curl_div, line_integral, surface_integral, verify_classical

__version__ = "0.1.0"
