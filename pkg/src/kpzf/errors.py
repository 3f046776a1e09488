"""Exception hierarchy shared by all modules."""


class KpzfError(Exception):
    """Base class for library errors."""


class ParameterError(KpzfError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(KpzfError, ValueError):
    """A function was evaluated outside its domain (pole, branch cut, sign)."""


class GeometryError(KpzfError):
    """Contours intersect, or a quadrature node sits on a pole."""


class ConditioningError(KpzfError):
    """LU factorisation hit a singular pivot at working precision."""


class AccuracyError(KpzfError):
    """Adaptive refinement did not reach the requested tolerance.

    Carries the best value obtained and its error estimate.
    """

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
