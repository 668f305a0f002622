"""Pseudo-spectral laboratory for the one-dimensional periodic Zakharov system."""

__version__ = "0.1.0"
