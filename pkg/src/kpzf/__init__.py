"""Fredholm-determinant formulas for directed polymers and KPZ-class distributions."""

__version__ = "0.1.0"
