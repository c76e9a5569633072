"""Exception types shared across the package."""


class ChargenetError(Exception):
    """Base class for all package errors."""


class InstanceFormatError(ChargenetError):
    """Raised when an instance file is malformed or inconsistent."""


class ConfigError(ChargenetError):
    """Raised when a run configuration is invalid (bad tolerances, flags, caps)."""


class EnumerationCapError(ConfigError):
    """Raised when a brute-force enumeration would exceed the configured cap."""


class EquilibriumError(ChargenetError):
    """Raised when a lower-level solve fails to reach the required residual.

    Carries the residual gap actually achieved so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfeasibleError(ChargenetError):
    """Raised when a problem (or subproblem) admits no feasible point."""
