"""Exception hierarchy.

Every error raised for a violated precondition derives from :class:`RoadError`,
which itself subclasses :class:`ValueError` so callers that only know about the
standard library still catch it.
"""


class RoadError(ValueError):
    """Base class for domain errors (CLI exit code 1)."""


class DimensionMismatchError(RoadError):
    pass


class DegenerateDirectionError(RoadError):
    """Raised when ``w' Sigma w`` is (numerically) zero."""


class SingularCovarianceError(RoadError):
    pass


class InfeasibleProblemError(RoadError):
    """The L1 budget is below ``1 / max_j |mu_d_j|``, so no feasible direction exists."""


class ConstraintViolationError(RoadError):
    pass


class PerturbationTooLargeError(RoadError):
    """A proof transformation needs a smaller estimation error than was supplied."""


class InsufficientDataError(RoadError):
    pass


class ConvergenceWarning(UserWarning):
    pass
