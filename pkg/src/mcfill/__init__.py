"""Exact finite-model machinery for MC-filling families and McShane-type sums."""

from fractions import Fraction

from .errors import InputError, InvariantViolation, McfillError, ResourceError
from .measure import GroundModel

__all__ = [
    "Fraction",
    "GroundModel",
    "InputError",
    "InvariantViolation",
    "McfillError",
    "ResourceError",
]

__version__ = "0.1.0"
