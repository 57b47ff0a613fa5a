"""Separable (multidimensional) compressive sensing of spectral light fields."""

__version__ = "0.1.0"
