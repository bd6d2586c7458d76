"""Effective metric Diophantine approximation: counts, constants and checks."""

from .numtheory import DomainError

__version__ = "0.1.0"
__all__ = ["DomainError", "__version__"]
