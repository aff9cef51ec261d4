"""Numerical and exact tools for twistor spaces of Riemannian 4-manifolds."""

__version__ = "0.1.0"
