"""Madelung hydrodynamics, non-local free energies and their covariant extension."""
__version__ = "0.1.0"

from .errors import BohmfluidError, NumericalAbort, RecoveryError, ValidationError, VacuumError
from .fields import ComplexField, Grid1D, ScalarField, SpacetimeField
from .params import PhysicalParams

__all__ = [
    "BohmfluidError", "ComplexField", "Grid1D", "NumericalAbort", "PhysicalParams", "RecoveryError",
    "ScalarField", "SpacetimeField", "ValidationError", "VacuumError", "__version__",
]
