"""Exception types raised across the package."""


class GCInverseError(Exception):
    """Base class for all package errors."""


class InvalidArgument(GCInverseError, ValueError):
    pass


class EigenvalueConditionViolated(GCInverseError):
    """0 is (numerically) a Dirichlet eigenvalue of -Laplacian + v."""


class LambdaTooSmall(GCInverseError):
    """Neumann iteration does not contract at this spectral parameter."""


class NotUniquelySolvable(GCInverseError):
    pass


class LambdaCapExceeded(GCInverseError):
    pass


class IllConditionedRegime(GCInverseError):
    """Exponential dynamic range on the boundary exceeds the configured cap."""


class FredholmAlternativeFailure(GCInverseError):
    pass


class NoUsableLambda(GCInverseError):
    pass
