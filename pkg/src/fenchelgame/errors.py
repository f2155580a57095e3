"""Exception types raised across the package."""


class FenchelGameError(Exception):
    """Base class for every error raised by this package."""


class ConjugateUnavailable(FenchelGameError):
    """Raised when f*(y) is requested but neither an analytic conjugate nor a
    gradient witness w with y = grad f(w) is available."""


class InvalidKappa(FenchelGameError, ValueError):
    """Raised when a condition number below 1 is supplied."""


class ProjectionFailure(FenchelGameError):
    """Raised when an iterative Bregman projection does not converge."""


class UnsupportedGeometry(FenchelGameError, ValueError):
    """Raised when a set cannot project under the requested geometry."""


class ProxUnavailable(FenchelGameError, TypeError):
    """Raised when a composite term has no proximal map."""


class RequiresStrongConvexity(FenchelGameError, ValueError):
    """Raised when a strongly convex strategy is used with mu = 0."""


class MissingOracle(FenchelGameError, ValueError):
    """Raised when a set lacks the gauge or linear oracle a strategy needs."""


class InvalidSpec(FenchelGameError, ValueError):
    """Raised when a game specification combines incompatible parts."""


class NoReferenceMinimizer(FenchelGameError):
    """Raised when a duality gap needs x* but none is known."""


class DegenerateFit(FenchelGameError, ValueError):
    """Raised when a rate fit gets too few points or a gap at machine zero."""


class NonFiniteIterate(FenchelGameError, FloatingPointError):
    """Raised when an iterate overflows or becomes NaN.

    Attributes
    ----------
    round : int
        The round at which the non-finite value appeared.
    trace : GameTrace or None
        The rounds completed before the failure, for diagnosis.
    """

    def __init__(self, message, round=None, trace=None):
        super().__init__(message)
        self.round = round
        self.trace = trace
