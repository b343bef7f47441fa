"""Band functions of the half-line shifted-oscillator family and their
complex continuation via contour-integral spectral projectors."""

from .config import DEFAULT_TOL, Tolerances, default_truncation
from .errors import (
    BracketingError,
    CertificationError,
    ConfigurationError,
    ContourError,
    DegennesError,
    DiagnosticError,
    DomainError,
    EigensolverError,
    NearSingularError,
    NumericalError,
    RankAmbiguityError,
    StripExceededError,
    VerificationError,
)
from .holomorphic import (
    ContourSpec,
    ExtensionMethod,
    ExtensionResult,
    RieszProjection,
    StripPoint,
    StripSweepResult,
    cauchy_riemann_residual,
    estimate_r0,
    extend_mu,
    make_contour,
    real_ground_state,
    resolvent_difference,
    resolvent_norm,
    riesz_projection,
    strip_sweep,
    weighted_resolvent_norm,
)
from .operator import (
    AssembledOperator,
    Discretization,
    Family,
    OperatorSpec,
    Scheme,
    assemble,
    dilation_check,
    potential_values,
    real_part_form_min,
)
from .spectrum import (
    BandTable,
    MinusRow,
    MinusTable,
    Ordering,
    PlusRow,
    SpectrumResult,
    airy_comparison_levels,
    asymptotics_minus,
    asymptotics_plus,
    band_table,
    eigs,
    find_theta0,
    mu_1,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledOperator",
    "BandTable",
    "BracketingError",
    "CertificationError",
    "ConfigurationError",
    "ContourError",
    "ContourSpec",
    "DEFAULT_TOL",
    "DegennesError",
    "DiagnosticError",
    "Discretization",
    "DomainError",
    "EigensolverError",
    "ExtensionMethod",
    "ExtensionResult",
    "Family",
    "MinusRow",
    "MinusTable",
    "NearSingularError",
    "NumericalError",
    "OperatorSpec",
    "Ordering",
    "PlusRow",
    "RankAmbiguityError",
    "RieszProjection",
    "Scheme",
    "SpectrumResult",
    "StripExceededError",
    "StripPoint",
    "StripSweepResult",
    "Tolerances",
    "VerificationError",
    "airy_comparison_levels",
    "assemble",
    "asymptotics_minus",
    "asymptotics_plus",
    "band_table",
    "cauchy_riemann_residual",
    "default_truncation",
    "dilation_check",
    "eigs",
    "estimate_r0",
    "extend_mu",
    "find_theta0",
    "make_contour",
    "mu_1",
    "potential_values",
    "real_ground_state",
    "real_part_form_min",
    "resolvent_difference",
    "resolvent_norm",
    "riesz_projection",
    "strip_sweep",
    "weighted_resolvent_norm",
]
