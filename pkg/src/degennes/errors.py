"""Exception hierarchy.

Grouping matters for the CLI exit-code contract: configuration/domain
problems map to exit 2, numerical failures to exit 1 and verification
failures to exit 3.
"""


class DegennesError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(DegennesError, ValueError):
    """Invalid discretization or solver parameters (bad N, T, flags...)."""


class DomainError(DegennesError, ValueError):
    """Parameter outside the mathematical domain of an operator family."""


class NumericalError(DegennesError):
    """A computation ran but could not produce a trustworthy result."""


class EigensolverError(NumericalError):
    """Dense/banded eigensolver failure, carrying conditioning info."""

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (matrix condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class NearSingularError(NumericalError):
    """Shift z lies within resolution distance of the discrete spectrum."""


class ContourError(NumericalError):
    """A quadrature node on the contour hit a near-singular resolvent."""


class RankAmbiguityError(NumericalError):
    """Contour-integral projector trace is not close to an integer."""


class StripExceededError(NumericalError):
    """Rank-1 certification failed: the point lies outside the strip on
    which the continuation machinery is valid."""


class DiagnosticError(NumericalError):
    """Cross-check disagreement between two routes to the same value."""


class BracketingError(NumericalError):
    """1-d minimization found no interior minimum in the search interval."""


class CertificationError(NumericalError):
    """A spectral-gap certificate could not be established."""


class VerificationError(DegennesError):
    """One or more checks of the verification suite failed."""
