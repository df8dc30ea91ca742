"""Exception hierarchy shared across the package."""


class RobustDmdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(RobustDmdError, ValueError):
    """A numeric input violates a precondition (non-finite, wrong shape, ...)."""


class InvalidConfigError(RobustDmdError, ValueError):
    """A configuration value is out of range or inconsistent."""


class BasisOverflowError(RobustDmdError, FloatingPointError):
    """exp(alpha * t) would overflow double precision."""


class DataFormatError(RobustDmdError, ValueError):
    """A snapshot or result file could not be parsed."""


class SolverError(RobustDmdError, RuntimeError):
    """An inner or outer solve failed; message carries the context."""
