"""Hamiltonian-based exponentiation of Hermitian-preserving maps."""

__version__ = "0.1.0"
