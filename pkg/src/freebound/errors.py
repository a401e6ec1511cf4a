"""Exception and warning classes shared across the package."""


class FreeboundError(Exception):
    """Base class for all errors raised by freebound."""


class NonDivisibleExtent(FreeboundError, ValueError):
    pass


class NonFiniteSample(FreeboundError, ValueError):
    pass


class BoundaryNode(FreeboundError, IndexError):
    pass


class EmptyBall(FreeboundError, ValueError):
    pass


class NegativityViolation(FreeboundError, ValueError):
    """A field that must be nonnegative has values below the clamp tolerance."""

    def __init__(self, message, min_value=None):
        super().__init__(message)
        self.min_value = min_value


class GridMismatch(FreeboundError, ValueError):
    pass


class NegativeBoundary(FreeboundError, ValueError):
    pass


class BadParameter(FreeboundError, ValueError):
    pass


class DegenerateData(FreeboundError, ValueError):
    pass


class EmptyFB(FreeboundError, ValueError):
    pass


class HypothesisViolation(FreeboundError, ValueError):
    pass


class PointTooDeep(FreeboundError, ValueError):
    pass


class RadiiUnresolvable(FreeboundError, ValueError):
    pass


class OracleFailure(FreeboundError, AssertionError):
    pass


class ParseError(FreeboundError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(FreeboundError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class FixedPointNonConvergence(FreeboundError, RuntimeError):
    """Picard iteration of the penalized map did not settle.

    Carries the last iterate so callers can inspect or restart from it.
    """

    def __init__(self, message, changes=None, eps=None, pair=None):
        super().__init__(message)
        self.changes = changes
        self.eps = eps
        self.pair = pair


class NonConvergence(RuntimeWarning):
    """Emitted (not raised) when an inner PDE solve hits its iteration cap."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
