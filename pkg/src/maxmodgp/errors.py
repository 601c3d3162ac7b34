"""Exception hierarchy shared by all modules."""


class MaxModError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(MaxModError, ValueError):
    """Invalid argument: wrong shape, ordering, index or range."""


class SeparationError(ParameterError):
    """A new knot is closer than the minimal separation to an existing one."""


class NumericalError(MaxModError, ArithmeticError):
    """A factorization or linear solve failed."""


class InfeasibleError(MaxModError):
    """The interpolation and inequality constraints admit no solution."""


class ConfigError(ParameterError):
    """A run configuration is malformed or names unknown keys."""


class DataError(MaxModError, ValueError):
    """A dataset or points file cannot be ingested."""
