"""Exception types raised by sepsense."""


class SepsenseError(Exception):
    """Base class for all package errors."""


class ConfigError(SepsenseError, ValueError):
    """Invalid experiment configuration."""


class NumericalError(SepsenseError, RuntimeError):
    """A numerical routine failed (no convergence, singular system, ...)."""


class ConvergenceError(NumericalError):
    """An iterative method hit its iteration cap."""


class StabilityError(NumericalError):
    """A feedback gain or closed loop is not stable where it must be."""
