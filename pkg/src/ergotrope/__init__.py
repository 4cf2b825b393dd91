"""Finite-volume laboratory for ergodic Schrödinger operators.

Operators, potentials, spectral objects and entanglement-entropy
functionals of free lattice fermions, with Monte Carlo drivers for
area-law, exponential-decay and Lyapunov-exponent measurements.
"""

__version__ = "0.1.0"
