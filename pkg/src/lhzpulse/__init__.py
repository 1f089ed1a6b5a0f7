"""Parity-encoded annealing: Pauli algebra, pulse compilation, simulation and cost accounting."""

__version__ = "0.1.0"
