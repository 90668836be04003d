"""Fault-tolerant logical CNOT laboratory for the five-qubit and Steane codes."""

from ftlab.pauli import CliffordMap, PauliString

__all__ = ["CliffordMap", "PauliString"]
__version__ = "0.1.0"
