"""Numerical laboratory for sequential position measurements."""
__version__ = "0.1.0"
