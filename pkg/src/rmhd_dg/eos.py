"""Ideal-gas equation of state for the relativistic solver.

The solver only needs the specific enthalpy H(p, rho) and its two partial
derivatives. Keeping that surface minimal makes it possible to swap in a
different EOS later, although only the ideal law is shipped: the
conservative-to-primitive recovery equation used elsewhere is specific to
H = 1 + Gamma/(Gamma-1) * p/rho.

All functions broadcast over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EosSpec:
    """Ideal equation of state with adiabatic index gamma in (1, 2].

    The upper bound gamma <= 2 is required for the causality/admissibility
    inequalities the limiter relies on; relativistic kinetic theory gives
    the same restriction.
    """

    gamma: float
    kind: str = "ideal"

    def __post_init__(self):
        if self.kind != "ideal":
            raise ValueError(f"unsupported EOS kind: {self.kind!r}")
        if not 1.0 < self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in (1, 2], got {self.gamma}")

    @property
    def gm1(self):
        """gamma - 1, the factor appearing in nearly every formula."""
        return self.gamma - 1.0


def _check_positive(p, rho):
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(p <= 0.0) or np.any(rho <= 0.0):
        raise ValueError("enthalpy requires p > 0 and rho > 0")
    return p, rho


def enthalpy(eos, p, rho):
    """Specific enthalpy H = 1 + gamma/(gamma-1) * p/rho."""
    p, rho = _check_positive(p, rho)
    return 1.0 + eos.gamma / eos.gm1 * (p / rho)


def enthalpy_partials(eos, p, rho):
    """Analytic (dH/dp, dH/drho) at constant rho resp. constant p."""
    p, rho = _check_positive(p, rho)
    dHdp = eos.gamma / (eos.gm1 * rho)
    dHdrho = -eos.gamma * p / (eos.gm1 * rho**2)
    return dHdp, dHdrho


def eos_condition_margins(eos, p, rho):
    """Signed margins of the three admissibility conditions on the EOS.

    Returns (m1, m2, m3) where the conditions hold iff
      m1 = H - sqrt(1 + p^2/rho^2) - p/rho        >= 0
      m2 = dH/drho - H*(1/rho - dH/dp)            >  0
      m3 = -dH/drho                               >  0
    For the ideal EOS with gamma in (1, 2] all three are positive for every
    p, rho > 0.
    """
    p, rho = _check_positive(p, rho)
    H = enthalpy(eos, p, rho)
    dHdp, dHdrho = enthalpy_partials(eos, p, rho)
    m1 = H - np.sqrt(1.0 + (p / rho) ** 2) - p / rho
    m2 = dHdrho - H * (1.0 / rho - dHdp)
    m3 = -dHdrho
    return m1, m2, m3
