"""Radial spectral solver and estimate-verification toolkit for the
nonlinear Schrodinger equation with an inverse-square potential."""

__version__ = "0.1.0"
