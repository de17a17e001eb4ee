"""Exact computer algebra for 2-connections over differential crossed modules."""
from .exact import Poly, Rational, VarRegistry

__version__ = "0.1.0"

__all__ = ["Poly", "Rational", "VarRegistry", "__version__"]
