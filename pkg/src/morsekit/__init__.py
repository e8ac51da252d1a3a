"""Computational Morse theory: gradient-flow moduli, extended complexes, spectral sequences."""

__version__ = "0.1.0"
