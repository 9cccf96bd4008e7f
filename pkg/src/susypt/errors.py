"""Exception hierarchy shared by all modules."""


class SusyPTError(Exception):
    """Base class for all errors raised by :mod:`susypt`."""


class ParameterError(SusyPTError, ValueError):
    """A parameter violates a documented precondition."""


class DomainError(SusyPTError, ValueError):
    """An argument lies outside the open domain of a function."""


class CapacityError(SusyPTError, ValueError):
    """A requested order or index exceeds a configured capacity."""


class AccuracyError(SusyPTError, ArithmeticError):
    """A numerical procedure could not reach the requested accuracy.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (partial sums, achieved bounds, term counts).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SingularPartnerError(ParameterError):
    """The seed function of a partner construction vanishes on the grid."""

    def __init__(self, message, x_zero=None):
        super().__init__(message)
        self.x_zero = x_zero


class ReductionError(SusyPTError, RuntimeError):
    """Fundamental-domain reduction exceeded its iteration cap."""


class ConfigError(SusyPTError, ValueError):
    """An experiment configuration could not be parsed or validated."""
