"""Exception types raised across the package."""


class ParlameError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(ParlameError, ValueError):
    pass


class NotParabolicError(ParlameError, ValueError):
    """Raised when a Lamé coefficient set violates the parabolicity margin.

    The offending root is stored on ``root``.
    """

    def __init__(self, message, root):
        super().__init__(message)
        self.root = root


class NumericalError(ParlameError, ArithmeticError):
    """Quadrature or extrapolation failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class AmbiguousTraceError(ParlameError, ValueError):
    """Target lies on the integration set and no side was given."""


class IllConditionedError(ParlameError, ArithmeticError):
    pass


class UnsupportedDimensionError(ParlameError, ValueError):
    pass
