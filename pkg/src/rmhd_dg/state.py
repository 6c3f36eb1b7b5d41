"""Conserved/primitive state vectors, admissibility predicates, recovery.

State layout (last axis, length 8, geometrized units c = 1):

  conserved  U = [D, m1, m2, m3, B1, B2, B3, E]
  primitive  P = [rho, v1, v2, v3, B1, B2, B3, p]

D = rho*W is the relativistic mass density, m the momentum density,
E the total energy density. The magnetic field occupies the same slots in
both layouts since it is itself a conserved quantity.

The admissible set is characterized without primitives through
  D > 0,  q(U) = E - sqrt(D^2 + |m|^2) > 0,  Psi(U) > 0,
with
  Phi = sqrt((|B|^2 - E)^2 + 3(E^2 - D^2 - |m|^2)),
  Psi = (Phi - 2(|B|^2 - E)) * sqrt(Phi + |B|^2 - E)
        - sqrt(27/2 * (D^2 |B|^2 + (m.B)^2)).

Recovery solves a scalar root problem for theta = rho*H*W^2: the residual
below is the total energy implied by theta minus the stored E, strictly
monotone in theta over the physically valid bracket. Everything here
broadcasts over leading axes; these are the reference implementations that
the fast numba kernels are verified against.
"""

import numpy as np

from .eos import enthalpy

# component indices shared by both layouts
ID, IM1, IM2, IM3, IB1, IB2, IB3, IE = range(8)
IRHO, IV1, IV2, IV3, _, _, _, IP = range(8)


class InadmissibleStateError(ValueError):
    """Recovery was asked to invert a state outside the admissible set."""


class RecoveryConvergenceError(RuntimeError):
    """The bracketed theta solve failed to reach tolerance."""


def conserved_from_primitive(prim, eos):
    """Forward map P -> U. Closed form, exact up to round-off.

    m = (rho*H*W^2 + |B|^2) v - (v.B) B
    E = rho*H*W^2 - p_tot + |B|^2,  p_tot = p + (|B|^2/W^2 + (v.B)^2)/2
    """
    prim = np.asarray(prim, dtype=float)
    rho = prim[..., IRHO]
    v = prim[..., IV1 : IV3 + 1]
    B = prim[..., IB1 : IB3 + 1]
    p = prim[..., IP]
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise ValueError("superluminal velocity: |v| >= 1")
    W2 = 1.0 / (1.0 - v2)
    H = enthalpy(eos, p, rho)
    theta = rho * H * W2
    vB = np.sum(v * B, axis=-1)
    B2 = np.sum(B * B, axis=-1)
    p_tot = p + 0.5 * (B2 / W2 + vB * vB)

    U = np.empty(prim.shape, dtype=float)
    U[..., ID] = rho * np.sqrt(W2)
    U[..., IM1 : IM3 + 1] = (theta + B2)[..., None] * v - vB[..., None] * B
    U[..., IB1 : IB3 + 1] = B
    U[..., IE] = theta - p_tot + B2
    return U


def theta_residual(U, theta, eos):
    """Residual f(theta) of the recovery equation, plus a validity mask.

    Returns (f, valid). valid is False where the candidate theta implies
    |v| >= 1 (the inner square root of the Lorentz-factor expression is
    non-positive); there f is returned as -inf so callers can treat the
    point as "below the root" when bracketing, and no NaN escapes.
    """
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    D = U[..., ID]
    m = U[..., IM1 : IM3 + 1]
    B = U[..., IB1 : IB3 + 1]
    E = U[..., IE]
    m2 = np.sum(m * m, axis=-1)
    B2 = np.sum(B * B, axis=-1)
    mB = np.sum(m * B, axis=-1)

    with np.errstate(all="ignore"):
        A = theta + B2
        den = theta * theta * A * A
        v2 = (theta * theta * m2 + (2.0 * theta + B2) * mB * mB) / den
        valid = (theta > 0.0) & (v2 < 1.0)
        u = 1.0 - v2  # 1/W^2
        g = eos.gm1 / eos.gamma
        f = (
            theta
            - g * (theta * u - D * np.sqrt(u))
            + B2
            - 0.5 * (B2 * u + (mB / theta) ** 2)
            - E
        )
    f = np.where(valid, f, -np.inf)
    return f, valid


def theta_residual_derivative(U, theta, eos):
    """Analytic df/dtheta of the recovery residual (valid region only)."""
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    D = U[..., ID]
    m = U[..., IM1 : IM3 + 1]
    B = U[..., IB1 : IB3 + 1]
    m2 = np.sum(m * m, axis=-1)
    B2 = np.sum(B * B, axis=-1)
    mB2 = np.sum(m * B, axis=-1) ** 2

    with np.errstate(all="ignore"):
        A = theta + B2
        h = theta * theta * A * A
        g = theta * theta * m2 + (2.0 * theta + B2) * mB2
        v2 = g / h
        dv2 = (2.0 * theta * m2 + 2.0 * mB2 - v2 * 2.0 * theta * A * (A + theta)) / h
        u = 1.0 - v2
        c = eos.gm1 / eos.gamma
        fp = (
            1.0
            - c * (u - theta * dv2 + D * dv2 / (2.0 * np.sqrt(u)))
            + 0.5 * B2 * dv2
            + mB2 / theta**3
        )
    return fp


def theta_from_conserved(U, eos, tol=1e-12, max_iter=200):
    """Solve the recovery equation for theta = rho*H*W^2 by bisection.

    The initial guess theta0 = E - |B|^2/2 is positive for every admissible
    state (it equals theta - p + (v^2|B|^2 - (v.B)^2)/2 >= theta/Gamma).
    The bracket is expanded geometrically from there; candidates implying
    |v| >= 1 count as below the root. The returned theta is the upper
    (valid) bracket end, which guarantees p > 0 and |v| < 1 for the
    recovered primitives of an admissible state.
    """
    U = np.asarray(U, dtype=float)
    Uf = np.atleast_2d(U)

    D = Uf[..., ID]
    B = Uf[..., IB1 : IB3 + 1]
    E = Uf[..., IE]
    B2 = np.sum(B * B, axis=-1)

    theta0 = E - 0.5 * B2
    bad = ~np.isfinite(theta0) | (theta0 <= 0.0)
    if np.any(bad):
        raise InadmissibleStateError(
            f"recovery: nonpositive initial theta at {np.argwhere(bad)[:5].tolist()}"
        )

    f0, _ = theta_residual(Uf, theta0, eos)
    lo = np.where(f0 < 0.0, theta0, np.nan)
    hi = np.where(f0 >= 0.0, theta0, np.nan)

    # expand upward where f(theta0) < 0
    need = f0 < 0.0
    cand = theta0.copy()
    for _ in range(130):
        if not np.any(need):
            break
        cand = np.where(need, cand * 2.0, cand)
        f, _ = theta_residual(Uf, cand, eos)
        found = need & (f >= 0.0)
        hi = np.where(found, cand, hi)
        need &= ~found
    if np.any(need):
        raise RecoveryConvergenceError("recovery: no upper bracket within range")

    # shrink downward where f(theta0) >= 0; invalid candidates count as f < 0
    need = f0 >= 0.0
    cand = theta0.copy()
    for _ in range(130):
        if not np.any(need):
            break
        cand = np.where(need, cand * 0.5, cand)
        f, _ = theta_residual(Uf, cand, eos)
        found = need & (f < 0.0)
        lo = np.where(found, cand, lo)
        need &= ~found
    if np.any(need):
        raise InadmissibleStateError(
            "recovery: residual has no sign change (inadmissible state); "
            f"indices {np.argwhere(need)[:5].tolist()}"
        )

    converged = np.zeros(lo.shape, dtype=bool)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f, _ = theta_residual(Uf, mid, eos)
        below = f < 0.0
        lo = np.where(~converged & below, mid, lo)
        hi = np.where(~converged & ~below, mid, hi)
        converged = (hi - lo) <= tol * hi
        if np.all(converged):
            break
    if not np.all(converged):
        f, _ = theta_residual(Uf, hi, eos)
        worst = np.argmax(hi - lo)
        raise RecoveryConvergenceError(
            f"recovery: bisection stalled, width {(hi - lo).flat[worst]:.3e}, "
            f"residual {np.asarray(f).flat[worst]:.3e}"
        )

    # Newton polish from the upper bracket end. Bisection guarantees the
    # root to tol relative; a few Newton steps take theta to round-off so
    # small pressures do not inherit the bracketing tolerance. The noise
    # plateau of f can misplace the bisection bracket by ~ulp(E)/f', so
    # candidates are bounded by step size rather than by the bracket;
    # invalid or runaway steps are rejected.
    theta = hi
    for _ in range(3):
        f, valid = theta_residual(Uf, theta, eos)
        fp = theta_residual_derivative(Uf, theta, eos)
        with np.errstate(all="ignore"):
            cand = theta - f / fp
        ok = valid & np.isfinite(cand) & (fp > 0.0)
        ok &= (cand > 0.5 * theta) & (cand < 1.5 * theta)
        cand = np.where(ok, cand, theta)
        fc, validc = theta_residual(Uf, cand, eos)
        accept = ok & validc & np.isfinite(fc)
        theta = np.where(accept, cand, theta)
    return theta.reshape(U.shape[:-1])


def primitive_from_conserved(U, eos, tol=1e-12, max_iter=200):
    """Recover primitives from an admissible conserved state.

    Round trip through conserved_from_primitive reproduces U to about
    10 * tol relative. Inadmissible input surfaces as
    InadmissibleStateError where detectable (the admissibility predicate
    remains the caller's responsibility).
    """
    theta = theta_from_conserved(U, eos, tol=tol, max_iter=max_iter)
    return primitives_at_theta(U, theta, eos)


def primitives_at_theta(U, theta, eos):
    """Closed-form primitives for a given theta = rho*H*W^2."""
    U = np.asarray(U, dtype=float)
    theta = np.asarray(theta, dtype=float)
    D = U[..., ID]
    m = U[..., IM1 : IM3 + 1]
    B = U[..., IB1 : IB3 + 1]
    B2 = np.sum(B * B, axis=-1)
    mB = np.sum(m * B, axis=-1)

    v = (m + (mB / theta)[..., None] * B) / (theta + B2)[..., None]
    v2 = np.sum(v * v, axis=-1)
    W = 1.0 / np.sqrt(1.0 - v2)
    rho = D / W
    p = eos.gm1 / eos.gamma * (theta / (W * W) - D / W)

    prim = np.empty(U.shape, dtype=float)
    prim[..., IRHO] = rho
    prim[..., IV1 : IV3 + 1] = v
    prim[..., IB1 : IB3 + 1] = B
    prim[..., IP] = p
    return prim


class AdmissibilityReport:
    """Margins of the three explicit admissibility conditions.

    d_margin = D, q_margin = q(U), psi_margin = Psi_eps(U) (Psi evaluated
    with E replaced by E - eps). admissible means D >= eps, q >= eps and
    Psi_eps >= 0, with strict inequalities when eps = 0.
    """

    __slots__ = ("d_margin", "q_margin", "psi_margin", "admissible", "eps")

    def __init__(self, d_margin, q_margin, psi_margin, admissible, eps):
        self.d_margin = d_margin
        self.q_margin = q_margin
        self.psi_margin = psi_margin
        self.admissible = admissible
        self.eps = eps

    def __repr__(self):
        return (
            f"AdmissibilityReport(D={self.d_margin}, q={self.q_margin}, "
            f"Psi={self.psi_margin}, admissible={self.admissible})"
        )


def psi_value(D, m1, m2, m3, B1, B2, B3, E):
    """Psi(U) with square-root arguments clamped at zero.

    The clamps matter only for states already far outside the admissible
    set (where the reported margin is negative anyway); they guarantee the
    predicate accepts arbitrary finite input without producing NaN.
    """
    m2n = m1 * m1 + m2 * m2 + m3 * m3
    B2n = B1 * B1 + B2 * B2 + B3 * B3
    mB = m1 * B1 + m2 * B2 + m3 * B3
    bme = B2n - E
    phi = np.sqrt(np.maximum(bme * bme + 3.0 * (E * E - D * D - m2n), 0.0))
    root = np.sqrt(np.maximum(phi + bme, 0.0))
    return (phi - 2.0 * bme) * root - np.sqrt(13.5 * (D * D * B2n + mB * mB))


def g1_report(U, eps=0.0):
    """Evaluate the explicit admissibility predicate on arbitrary input."""
    U = np.asarray(U, dtype=float)
    D = U[..., ID]
    m = U[..., IM1 : IM3 + 1]
    B = U[..., IB1 : IB3 + 1]
    E = U[..., IE]
    q = E - np.sqrt(D * D + np.sum(m * m, axis=-1))
    psi = psi_value(
        D,
        U[..., IM1],
        U[..., IM2],
        U[..., IM3],
        U[..., IB1],
        U[..., IB2],
        U[..., IB3],
        E - eps,
    )
    if eps == 0.0:
        adm = (D > 0.0) & (q > 0.0) & (psi > 0.0)
    else:
        adm = (D >= eps) & (q >= eps) & (psi >= 0.0)
    return AdmissibilityReport(D, q, psi, adm, eps)


def xi_star(vstar, Bstar):
    """The auxiliary covector xi* = (-sqrt(1-|v*|^2), -v*, -(1-|v*|^2)B* - (v*.B*)v*, 1)."""
    vstar = np.asarray(vstar, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)
    v2 = np.sum(vstar * vstar, axis=-1)
    if np.any(v2 >= 1.0):
        raise ValueError("xi_star requires |v*| < 1")
    vB = np.sum(vstar * Bstar, axis=-1)
    xi = np.empty(np.broadcast_shapes(vstar.shape, Bstar.shape)[:-1] + (8,), dtype=float)
    xi[..., ID] = -np.sqrt(1.0 - v2)
    xi[..., IM1 : IM3 + 1] = -vstar
    xi[..., IB1 : IB3 + 1] = -(1.0 - v2)[..., None] * Bstar - vB[..., None] * vstar
    xi[..., IE] = 1.0
    return xi


def p_m_star(vstar, Bstar):
    """Auxiliary magnetic pressure ((1-|v*|^2)|B*|^2 + (v*.B*)^2)/2 >= 0."""
    vstar = np.asarray(vstar, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)
    v2 = np.sum(vstar * vstar, axis=-1)
    if np.any(v2 >= 1.0):
        raise ValueError("p_m_star requires |v*| < 1")
    vB = np.sum(vstar * Bstar, axis=-1)
    return 0.5 * ((1.0 - v2) * np.sum(Bstar * Bstar, axis=-1) + vB * vB)


def g2_functional(U, vstar, Bstar):
    """U . xi*(v*, B*) + p_m*(v*, B*); positive for all (v*, B*) iff U is admissible."""
    U = np.asarray(U, dtype=float)
    return np.sum(U * xi_star(vstar, Bstar), axis=-1) + p_m_star(vstar, Bstar)


def conserved_scale(U):
    """Magnitude of a conserved state used for relative-error scaling."""
    U = np.asarray(U, dtype=float)
    m = np.linalg.norm(U[..., IM1 : IM3 + 1], axis=-1)
    B2 = np.sum(U[..., IB1 : IB3 + 1] ** 2, axis=-1)
    return np.maximum.reduce([np.abs(U[..., ID]), m, B2, np.abs(U[..., IE])])


def round_trip_error(prim_in, prim_out, eos, scale_floor=1e-4):
    """Componentwise relative error between two primitive states.

    Each component is measured against the larger of its own natural
    scale and scale_floor times the conditioning amplifier of its
    extraction from the conserved vector. With S = max(D, |m|, |B|^2, E):

      rho, p : scale = max(|reference|, scale_floor * S). Contributions
               below the float resolution of the stored total energy are
               unrecoverable, so pure relative accuracy on p = 1e-8 under
               |B| = 2e3 would be vacuous. Rounding m alone perturbs the
               recovered p by a few eps_mach * S (the m.B cancellation),
               so scale_floor must exceed eps_mach divided by the target
               tolerance for the metric to be attainable at all; the
               default sits an order above that bound.
      v      : scale = max(1, scale_floor * S / theta). The component of
               v along B enters m multiplied by theta = rho*H*W^2 while m
               itself has magnitude up to S, so round-off in m perturbs
               that component by ~eps_mach * S / theta. Under theta ~ 1e-4,
               |B|^2 ~ 1e6 no solver can do better than ~1e-6 absolute.
      B      : copied, never solved for; scale = max(|B|, 1).
    """
    prim_in = np.asarray(prim_in, dtype=float)
    prim_out = np.asarray(prim_out, dtype=float)
    S = conserved_scale(conserved_from_primitive(prim_in, eos))
    rho = prim_in[..., IRHO]
    v2 = np.sum(prim_in[..., IV1 : IV3 + 1] ** 2, axis=-1)
    W2 = 1.0 / (1.0 - v2)
    theta = rho * enthalpy(eos, prim_in[..., IP], rho) * W2
    diff = np.abs(prim_out - prim_in)
    scale = np.empty(prim_in.shape, dtype=float)
    scale[..., IRHO] = np.maximum(rho, scale_floor * S)
    scale[..., IV1 : IV3 + 1] = np.maximum(1.0, scale_floor * S / theta)[..., None]
    scale[..., IB1 : IB3 + 1] = np.maximum(np.abs(prim_in[..., IB1 : IB3 + 1]), 1.0)
    scale[..., IP] = np.maximum(prim_in[..., IP], scale_floor * S)
    return np.max(diff / scale, axis=-1)
