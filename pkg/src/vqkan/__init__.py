"""Adaptive variational quantum Kolmogorov-Arnold networks on a statevector simulator."""
from .backend import NAME as BACKEND
from .pauli import OperatorPool, PauliString, generate_pool
from .qsim import StateVector, zero_state
from .spline import SplineGrid

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "OperatorPool",
    "PauliString",
    "SplineGrid",
    "StateVector",
    "generate_pool",
    "zero_state",
]
