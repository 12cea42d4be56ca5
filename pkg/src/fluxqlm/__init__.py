"""Superconducting-circuit quantum link model: couplings, gauge-sector solvers,
loop and string observables, and cavity readout models."""

__version__ = "0.1.0"

from .errors import (CapacityError, ConfigError, DegeneracyError, DomainError, FluxQLMError,
                     NumericError, OptimizationError, ResonanceError)

__all__ = ["__version__", "FluxQLMError", "DomainError", "NumericError", "DegeneracyError",
           "CapacityError", "ResonanceError", "OptimizationError", "ConfigError"]
