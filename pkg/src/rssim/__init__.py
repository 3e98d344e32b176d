"""Sandwiched Rényi mutual information, channel-simulation error exponents
and smoothing of the max-mutual information."""

from .settings import DEFAULT_SETTINGS, SolverSettings

__all__ = ["DEFAULT_SETTINGS", "SolverSettings"]
__version__ = "0.1.0"
