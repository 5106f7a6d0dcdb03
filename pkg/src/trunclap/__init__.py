"""Numerical evaluation of fractional truncated Laplacians on radial profiles."""

__version__ = "0.1.0"
