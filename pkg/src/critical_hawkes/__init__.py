"""Simulation and numerical verification for critical marked Hawkes processes."""
from ._accel import backend
from .model import ModelSpec

__version__ = "0.1.0"

__all__ = ["ModelSpec", "backend", "__version__"]
