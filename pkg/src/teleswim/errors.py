"""Exception hierarchy shared by every module."""


class TeleswimError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TeleswimError, ValueError):
    """An argument lies outside the domain of an operation."""


class ExtrapolationError(DomainError):
    """A tabulated profile was evaluated beyond its last sample."""


class SaturationError(DomainError):
    """Requested clock value is at or beyond the finite limit of tau(t)."""

    def __init__(self, tau, tau_inf):
        super().__init__(f"tau={tau!r} is not below the saturation value tau_inf={tau_inf!r}")
        self.tau = tau
        self.tau_inf = tau_inf


class SingularityError(DomainError):
    """The effective rate lambda/w is undefined because w vanishes."""


class DegenerateLawError(DomainError):
    """The law has no absolutely continuous part (lambda0 == 0)."""


class CapabilityError(TeleswimError):
    """An algorithm cannot handle the supplied input (e.g. an unbounded rate)."""


class QualityError(TeleswimError):
    """A numerical result failed its own quality checks."""


class ConfigError(TeleswimError, ValueError):
    """A run configuration failed validation."""
