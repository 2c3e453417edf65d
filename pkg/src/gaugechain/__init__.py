"""Dyson maps, gauge-linked Hamiltonian chains and their numerical verification."""

__version__ = "0.1.0"
