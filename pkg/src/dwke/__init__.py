"""Numerical laboratory for the discrete wave kinetic equation on integer frequencies."""

from dwke.kernel import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
