"""Flux vectors, symmetrization source, LF flux, inequality margins.

The conservative system is

  U_t + dF1/dx + dF2/dy = 0,     U = (D, m, B, E),

with (i = 1, 2, 3; only the first two appear in 2D)

  F_i = (D v_i,
         v_i m - B_i (B/W^2 + (v.B) v) + p_tot e_i,
         v_i B - B_i v,
         m_i).

Because numerical magnetic fields are not exactly divergence-free across
cell interfaces, the scheme discretizes the symmetrizable form of the
system, which adds -S(U) div(B) with

  S(U) = (0, (1-|v|^2) B + (v.B) v, v, v.B).

F and S cannot be written explicitly in U, so all evaluations here take
primitives; recovery happens exactly once per quadrature point during
residual assembly. lemma34_margin / lemma36_margin are numeric oracles for
the two technical inequalities behind the weak positivity theorem; the
test suite samples them at scale.
"""

import numpy as np

from .state import (
    ID, IM1, IM3, IB1, IB2, IB3, IE, IRHO, IV1, IV3, IP,
    InadmissibleStateError, g1_report, g2_functional, p_m_star,
    primitive_from_conserved, xi_star,
)
from .eos import enthalpy


def unit_normal(n):
    """Validate and return a unit 2-vector as a float array."""
    n = np.asarray(n, dtype=float)
    if n.shape[-1] != 2:
        raise ValueError("normals are 2-vectors in the planar solver")
    if np.any(np.abs(np.sum(n * n, axis=-1) - 1.0) > 1e-14):
        raise ValueError("normal is not unit length")
    return n


def _prim_parts(prim, eos):
    prim = np.asarray(prim, dtype=float)
    rho = prim[..., IRHO]
    v = prim[..., IV1 : IV3 + 1]
    B = prim[..., IB1 : IB3 + 1]
    p = prim[..., IP]
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise ValueError("flux evaluation requires |v| < 1")
    W2inv = 1.0 - v2
    theta = rho * enthalpy(eos, p, rho) / W2inv
    vB = np.sum(v * B, axis=-1)
    B2 = np.sum(B * B, axis=-1)
    p_tot = p + 0.5 * (B2 * W2inv + vB * vB)
    m = (theta + B2)[..., None] * v - vB[..., None] * B
    return rho, v, B, p, v2, W2inv, vB, B2, p_tot, m


def flux(prim, eos, i):
    """Directional flux F_i(U) evaluated from primitives, i in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise ValueError("direction index must be 1, 2 or 3")
    rho, v, B, p, v2, W2inv, vB, B2, p_tot, m = _prim_parts(prim, eos)
    vi = v[..., i - 1]
    Bi = B[..., i - 1]
    D = rho / np.sqrt(W2inv)

    F = np.empty(np.asarray(prim).shape, dtype=float)
    F[..., ID] = D * vi
    F[..., IM1 : IM3 + 1] = (
        vi[..., None] * m
        - Bi[..., None] * (W2inv[..., None] * B + vB[..., None] * v)
    )
    F[..., IM1 + (i - 1)] += p_tot
    F[..., IB1 : IB3 + 1] = vi[..., None] * B - Bi[..., None] * v
    F[..., IE] = m[..., i - 1]
    return F


def normal_flux(prim, eos, n):
    """<n, F> = n1 F1 + n2 F2 for a unit in-plane normal."""
    n = unit_normal(n)
    return n[..., 0, None] * flux(prim, eos, 1) + n[..., 1, None] * flux(prim, eos, 2)


def source_vector(prim):
    """S(U) = (0, (1-|v|^2)B + (v.B)v, v, v.B), the div(B) source direction."""
    prim = np.asarray(prim, dtype=float)
    v = prim[..., IV1 : IV3 + 1]
    B = prim[..., IB1 : IB3 + 1]
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise ValueError("source_vector requires |v| < 1")
    vB = np.sum(v * B, axis=-1)
    S = np.empty(prim.shape, dtype=float)
    S[..., ID] = 0.0
    S[..., IM1 : IM3 + 1] = (1.0 - v2)[..., None] * B + vB[..., None] * v
    S[..., IB1 : IB3 + 1] = v
    S[..., IE] = vB
    return S


def lf_flux(U_L, U_R, n, a=1.0, eos=None):
    """Global Lax-Friedrichs flux (1/2)(<n,F(U_L)> + <n,F(U_R)> - a (U_R - U_L)).

    a = 1 (the light speed) bounds every signal speed, which is what makes
    the positivity theory work without characteristic decompositions.
    """
    U_L = np.asarray(U_L, dtype=float)
    U_R = np.asarray(U_R, dtype=float)
    prim_L = primitive_from_conserved(U_L, eos)
    prim_R = primitive_from_conserved(U_R, eos)
    FL = normal_flux(prim_L, eos, n)
    FR = normal_flux(prim_R, eos, n)
    return 0.5 * (FL + FR - a * (U_R - U_L))


def lemma34_margin(U, vstar, Bstar, eos):
    """(U.xi* + p_m*)/sqrt(rho H) - |S(U).xi* + v*.B*|, nonnegative on G.

    This is the key pointwise inequality tying the source vector to the
    admissibility functional; it must hold for every admissible U and every
    auxiliary pair (|v*| < 1, B*).
    """
    U = np.asarray(U, dtype=float)
    if not np.all(g1_report(U).admissible):
        raise InadmissibleStateError("lemma34_margin requires admissible U")
    vstar = np.asarray(vstar, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)
    prim = primitive_from_conserved(U, eos)
    rhoH = prim[..., IRHO] * enthalpy(eos, prim[..., IP], prim[..., IRHO])
    S = source_vector(prim)
    xi = xi_star(vstar, Bstar)
    sxi = np.sum(S * xi, axis=-1) + np.sum(vstar * Bstar, axis=-1)
    return g2_functional(U, vstar, Bstar) / np.sqrt(rhoH) - np.abs(sxi)


def lemma36_margin(U, theta, n, vstar, Bstar, eos):
    """Margin of the LF-split inequality.

    (U + theta <n, F(U)>).xi* + p_m*
        + theta (<n, v*> p_m* - <n, B> (v*.B*))  >= 0
    for |theta| <= 1, unit n, admissible U and |v*| < 1. With theta = 0 it
    reduces to the plain quasi-linear admissibility functional.
    """
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > 1.0):
        raise ValueError("lemma36_margin requires |theta| <= 1")
    if not np.all(g1_report(U).admissible):
        raise InadmissibleStateError("lemma36_margin requires admissible U")
    n = unit_normal(n)
    vstar = np.asarray(vstar, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)

    prim = primitive_from_conserved(U, eos)
    Fn = normal_flux(prim, eos, n)
    xi = xi_star(vstar, Bstar)
    pm = p_m_star(vstar, Bstar)
    nv = np.sum(n * vstar[..., :2], axis=-1)
    nB = np.sum(n * U[..., IB1 : IB2 + 1], axis=-1)
    vBs = np.sum(vstar * Bstar, axis=-1)
    return (
        np.sum((U + theta[..., None] * Fn) * xi, axis=-1)
        + pm
        + theta * (nv * pm - nB * vBs)
    )


def rotate_state(vec, alpha):
    """Rotate the in-plane vector blocks of a state or flux by angle alpha.

    Applies the planar rotation to (c1, c2) of both the momentum/velocity
    block and the magnetic block; used by the rotation-invariance checks.
    """
    vec = np.asarray(vec, dtype=float).copy()
    c, s = np.cos(alpha), np.sin(alpha)
    for i0 in (IM1, IB1):
        x = vec[..., i0].copy()
        y = vec[..., i0 + 1].copy()
        vec[..., i0] = c * x - s * y
        vec[..., i0 + 1] = s * x + c * y
    return vec
