"""Numerical laboratory for the two-dimensional one-component plasma."""

__version__ = "0.1.0"
