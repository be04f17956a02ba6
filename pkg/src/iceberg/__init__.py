"""Simulation and compilation toolkit for the [[k+2, k, 2]] Iceberg error-detection code."""

from .code import CodeLayout, LogicalPauli
from .pauli import PauliString
from .simulator import NoiseModel

__all__ = ["CodeLayout", "LogicalPauli", "PauliString", "NoiseModel"]
__version__ = "0.1.0"
