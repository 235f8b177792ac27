"""Numerical laboratory for the AHT transport system ``y_t + (P y) . grad y = 0``."""

__version__ = "0.1.0"
