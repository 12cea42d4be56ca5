"""Exception types shared across the package."""


class FluxQLMError(Exception):
    """Base class for package errors."""


class DomainError(FluxQLMError, ValueError):
    """Argument outside the domain of a formula."""


class NumericError(FluxQLMError, ArithmeticError):
    """A numerical procedure failed to converge or lost accuracy."""


class DegeneracyError(FluxQLMError):
    """Spectrum does not have the level structure an operation expects."""


class CapacityError(FluxQLMError, MemoryError):
    """Requested basis or matrix exceeds the memory budget."""


class ResonanceError(FluxQLMError):
    """A drive detuning is too close to zero."""


class OptimizationError(FluxQLMError):
    """No feasible point in the requested search region."""


class ConfigError(FluxQLMError, ValueError):
    """Malformed or invalid run configuration."""
