"""Finite-population permutation statistics."""

__version__ = "0.1.0"
