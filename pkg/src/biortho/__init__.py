"""Biorthogonal-measure kernels, Fredholm determinants and polymer oracles."""

__version__ = "0.1.0"
