"""Treebolic space: geometry, isometries, closed-form walk laws, and Monte
Carlo simulators for Brownian motion with vertical drift on the space of
hyperbolic strips glued p-to-1 along horizontal lines."""

from .closed_forms import ClosedForms, ModelParams, Regime
from .padic import PadicRational
from .space import HTParams, HTPoint, origin
from .tree import OMEGA, TreeEnd, TreePoint, TreeVertex

__version__ = "0.1.0"

__all__ = [
    "ClosedForms",
    "HTParams",
    "HTPoint",
    "ModelParams",
    "OMEGA",
    "PadicRational",
    "Regime",
    "TreeEnd",
    "TreePoint",
    "TreeVertex",
    "origin",
    "__version__",
]
