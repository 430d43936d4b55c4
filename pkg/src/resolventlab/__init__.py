"""Numerical checks of resolvent and spectral-window estimates on model manifolds."""

__version__ = "0.1.0"
