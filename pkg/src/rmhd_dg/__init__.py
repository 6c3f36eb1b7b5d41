"""Physical-constraint-preserving DG solver for 2D special relativistic MHD."""

__version__ = "0.1.0"

from .eos import EosSpec, enthalpy, eos_condition_margins
from .state import (
    conserved_from_primitive,
    g1_report,
    g2_functional,
    primitive_from_conserved,
    theta_residual,
)

__all__ = [
    "EosSpec",
    "enthalpy",
    "eos_condition_margins",
    "conserved_from_primitive",
    "primitive_from_conserved",
    "theta_residual",
    "g1_report",
    "g2_functional",
]
