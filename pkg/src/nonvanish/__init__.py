"""Numerical laboratory for mollified moments of Dirichlet L-functions to prime moduli."""

__version__ = "0.1.0"
