"""Renyi-DP accounting for DP-SGD under fixed-size and Poisson subsampling."""
from ._backend import BACKEND
from .errors import DomainError, SaturationWarning

__version__ = "0.1.0"

__all__ = ["BACKEND", "DomainError", "SaturationWarning", "__version__"]
