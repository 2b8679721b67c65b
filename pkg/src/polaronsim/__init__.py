"""Lattice Fermi-polaron simulation on a dense statevector engine."""

from ._backend import NAME as KERNEL_BACKEND
from .errors import (
    CapacityError,
    CompileError,
    ConfigurationError,
    DivergenceError,
    NumericalError,
    PolaronSimError,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "CapacityError",
    "CompileError",
    "ConfigurationError",
    "DivergenceError",
    "NumericalError",
    "PolaronSimError",
]
