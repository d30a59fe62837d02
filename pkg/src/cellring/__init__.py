"""Coupled logistic-map cell rings: LZ complexity spectra and linearization stability."""

__version__ = "0.1.0"
