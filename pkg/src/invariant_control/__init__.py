"""Noise-aware shortcut-to-adiabaticity control via dynamical invariants."""

__version__ = "0.1.0"

from . import algebra, dynamics, measures, optimize, polynomial, protocols, states
from .errors import InvariantControlError

__all__ = [
    "algebra",
    "dynamics",
    "measures",
    "optimize",
    "polynomial",
    "protocols",
    "states",
    "InvariantControlError",
    "__version__",
]
