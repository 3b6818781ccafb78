"""Plane-sphere Casimir free energy beyond the proximity-force approximation.

Perfect reflectors at finite temperature: next-to-leading corrections for
nonzero Matsubara frequencies, the zero-frequency term (exact TE value and
asymptotic forms) and the resulting relative thermal correction and entropy.
"""

__version__ = "0.1.0"

from .core import (ConfigurationError, DomainError, EnergyBreakdown, Geometry, NumericError,
                   SpectralPoint, Thermal, Unit, convert_energy, make_config)

__all__ = [
    "__version__", "ConfigurationError", "DomainError", "EnergyBreakdown", "Geometry",
    "NumericError", "SpectralPoint", "Thermal", "Unit", "convert_energy", "make_config",
]
