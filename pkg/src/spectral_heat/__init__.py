"""Spectral heat content of subordinate killed Brownian motion on intervals and 3-balls."""

from .errors import (
    DomainError,
    FitError,
    NonConvergenceError,
    NumericalError,
    PoleError,
    QuadratureError,
    SpectralHeatError,
)
from .heat_brownian import Ball3, Interval, parse_domain
from .subordinator import Alpha

__version__ = "0.1.0"

__all__ = [
    "Alpha",
    "Ball3",
    "Interval",
    "parse_domain",
    "DomainError",
    "FitError",
    "NonConvergenceError",
    "NumericalError",
    "PoleError",
    "QuadratureError",
    "SpectralHeatError",
]
