"""Exception hierarchy.

Validation errors (bad input, wrong shapes, mismatched fields) derive from
``ValueError``; numerical-contract failures (non-convergence, spectral
pairing, failed fits) derive from ``ArithmeticError``.  The CLI maps the two
families to exit codes 2 and 1.
"""


class KProjError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(KProjError, ValueError):
    pass


class TagMismatchError(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class ZeroVectorError(ValidationError):
    pass


class DomainError(ValidationError):
    """A point lies outside the domain where an operation needs it inside."""


class NotHermitianError(ValidationError):
    pass


class NumericalError(KProjError, ArithmeticError):
    pass


class SpectralPairingError(NumericalError):
    pass


class NotPositiveDefiniteError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class GeometryError(NumericalError):
    pass


class SingularBoundaryError(NumericalError):
    pass


class CertificationError(NumericalError):
    pass
