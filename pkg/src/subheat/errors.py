"""Exception hierarchy shared by all modules."""


class SubheatError(Exception):
    """Base class for all engine errors."""


class ConfigError(SubheatError, ValueError):
    """Malformed run configuration or out-of-range parameters."""


class ValidationError(SubheatError):
    """A modelling hypothesis is violated (e.g. the shift constant is not negative)."""


class QuadratureError(SubheatError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance within budget."""


class TruncationError(SubheatError, ValueError):
    """Requested expansion order exceeds the known density expansion."""


class IllConditionedFit(SubheatError, ArithmeticError):
    """Least-squares design matrix is too ill-conditioned to report coefficients."""
