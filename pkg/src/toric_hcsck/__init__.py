"""Deformed Abreu equation on toric manifolds: solver and verification tools."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
