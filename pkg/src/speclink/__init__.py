"""Numerical spectrum linking: identify linear PDEs from data by comparing Chebyshev Koopman spectra."""

__version__ = "0.1.0"
