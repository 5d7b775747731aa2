"""Numerical tools for similarity structures on compact manifolds."""

__version__ = "0.1.0"
