"""Numerical laboratory for damped correlations and X-ray transforms on the Bolza surface."""

__version__ = "0.1.0"
