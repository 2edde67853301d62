"""Numerical laboratory for complete Kahler metrics on strictly pseudoconvex domains."""

__version__ = "0.1.0"

NORMALIZATION = "Laplacian = 2 g^{ij̄}∂∂̄"
