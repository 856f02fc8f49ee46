"""Numerical simulator of a quantum-injected optical parametric amplifier
acting as a universal optimal cloner and universal-NOT gate."""

__version__ = "0.1.0"
