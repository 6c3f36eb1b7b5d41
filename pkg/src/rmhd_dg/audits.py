"""Randomized property audits: state sampling, inequality margins, recovery.

These are the numeric oracles for the solver's pointwise theory. Sampling
is seeded and deterministic; every audit returns the worst case found so a
caller (test suite or the `check` CLI subcommand) can assert against a
tolerance. The field-level weak-positivity audit lives here too but builds
on the DG operator, imported lazily to keep module layering acyclic.
"""

import numpy as np

from . import state as st
from . import physics as ph
from .eos import EosSpec, enthalpy


def _directions(rng, n):
    d = rng.normal(size=(n, 3))
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    return d / np.maximum(norm, 1e-300)


def _log_uniform(rng, lo, hi, n):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))


def sample_primitives(rng, n, rho_range=(1e-2, 1e2), p_range=(1e-2, 1e2),
                      w_max=4.0, b_range=(1e-2, 1e2), zero_b_frac=0.1,
                      zero_v_frac=0.05):
    """Random admissible primitive states, shape (n, 8).

    Admissibility is by construction: any rho > 0, p > 0, |v| < 1 maps to
    an admissible conserved state. Magnitudes are log-uniform so the tails
    get exercised; a fraction of samples has exactly zero B or v to hit the
    degenerate branches.
    """
    prim = np.empty((n, 8))
    prim[:, st.IRHO] = _log_uniform(rng, *rho_range, n)
    prim[:, st.IP] = _log_uniform(rng, *p_range, n)
    W = rng.uniform(1.0, w_max, size=n)
    speed = np.sqrt(1.0 - 1.0 / (W * W))
    vdir = _directions(rng, n)
    prim[:, st.IV1 : st.IV3 + 1] = speed[:, None] * vdir
    bmag = _log_uniform(rng, *b_range, n)
    prim[:, st.IB1 : st.IB3 + 1] = bmag[:, None] * _directions(rng, n)
    zb = rng.random(n) < zero_b_frac
    prim[zb, st.IB1 : st.IB3 + 1] = 0.0
    zv = rng.random(n) < zero_v_frac
    prim[zv, st.IV1 : st.IV3 + 1] = 0.0
    return prim


def sample_conserved(rng, n, eos, **kw):
    return st.conserved_from_primitive(sample_primitives(rng, n, **kw), eos)


def sample_vstar_bstar(rng, n, wstar_max=8.0, bstar_range=(1e-3, 1e3),
                       zero_frac=0.05):
    """Auxiliary pairs (v*, B*) with |v*| < 1, including near-light speeds."""
    W = rng.uniform(1.0, wstar_max, size=n)
    vstar = np.sqrt(1.0 - 1.0 / (W * W))[:, None] * _directions(rng, n)
    Bstar = _log_uniform(rng, *bstar_range, n)[:, None] * _directions(rng, n)
    zero = rng.random(n) < zero_frac
    Bstar[zero] = 0.0
    return vstar, Bstar


def audit_lemma34(n=100_000, seed=7, gamma=5.0 / 3.0):
    """Worst relative margin of the source-vector inequality over n samples."""
    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    prim = sample_primitives(rng, n)
    U = st.conserved_from_primitive(prim, eos)
    vstar, Bstar = sample_vstar_bstar(rng, n)
    margin = ph.lemma34_margin(U, vstar, Bstar, eos)
    rhoH = prim[:, st.IRHO] * enthalpy(eos, prim[:, st.IP], prim[:, st.IRHO])
    scale = st.g2_functional(U, vstar, Bstar) / np.sqrt(rhoH) + np.abs(
        np.sum(ph.source_vector(prim) * st.xi_star(vstar, Bstar), axis=-1)
        + np.sum(vstar * Bstar, axis=-1)
    )
    rel = margin / np.maximum(scale, 1e-300)
    return float(np.min(rel))


def audit_lemma36(n=100_000, seed=11, gamma=5.0 / 3.0):
    """Worst relative margin of the LF-split inequality over n samples."""
    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    prim = sample_primitives(rng, n)
    U = st.conserved_from_primitive(prim, eos)
    vstar, Bstar = sample_vstar_bstar(rng, n)
    theta = rng.uniform(-1.0, 1.0, size=n)
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    nvec = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    margin = ph.lemma36_margin(U, theta, nvec, vstar, Bstar, eos)

    xi = st.xi_star(vstar, Bstar)
    pm = st.p_m_star(vstar, Bstar)
    Fn = ph.normal_flux(st.primitive_from_conserved(U, eos), eos, nvec)
    nB = np.sum(nvec * U[:, st.IB1 : st.IB2 + 1], axis=-1)
    nv = np.sum(nvec * vstar[:, :2], axis=-1)
    vBs = np.sum(vstar * Bstar, axis=-1)
    scale = (
        np.abs(np.sum(U * xi, axis=-1))
        + np.abs(theta) * np.abs(np.sum(Fn * xi, axis=-1))
        + pm
        + np.abs(theta * (nv * pm - nB * vBs))
    )
    rel = margin / np.maximum(scale, 1e-300)
    return float(np.min(rel))


def audit_convexity(n=100_000, seed=13, gamma=5.0 / 3.0):
    """Convexity of the admissible set: combos of admissible pairs stay in.

    Returns (fraction admissible, worst normalized Psi margin).
    """
    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    U1 = sample_conserved(rng, n, eos)
    U2 = sample_conserved(rng, n, eos)
    lam = rng.uniform(0.0, 1.0, size=n)[:, None]
    U = lam * U1 + (1.0 - lam) * U2
    rep = st.g1_report(U)
    scale = np.maximum(st.conserved_scale(U) ** 1.5, 1e-300)
    return float(np.mean(rep.admissible)), float(np.min(rep.psi_margin / scale))


def audit_round_trip(n=10_000, seed=17, gamma=5.0 / 3.0, stress=False, tol=1e-12):
    """Max scaled round-trip error of prim -> cons -> prim over n samples."""
    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    if stress:
        prim = sample_primitives(
            rng, n, rho_range=(1e-6, 1e3), p_range=(1e-8, 1e3),
            w_max=10.0, b_range=(1e-4, 2e3),
        )
    else:
        prim = sample_primitives(rng, n)
    U = st.conserved_from_primitive(prim, eos)
    out = st.primitive_from_conserved(U, eos, tol=tol)
    return float(np.max(st.round_trip_error(prim, out, eos)))


def audit_weak_pcp(n_fields=1000, nx=6, ny=5, seed=23, gamma=5.0 / 3.0,
                   safety=0.9, k=2):
    """Randomized audit of the weak positivity of the cell-mean update.

    For each random field in the discrete admissible set, picks dt
    satisfying the pointwise CFL condition built from the computed jump
    quantities sigma_{K,E,q}, forms Ubar + dt * Jtilde via the independent
    cell-average right-hand side, and checks strict admissibility.
    Returns (number of violating cells, worst q margin seen).
    """
    from .grid import CartesianMesh, build_basis, build_quadrature
    from .dg_operator import BoundarySpec, cell_average_rhs_field, sigma_max_field

    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), nx, ny)
    basis = build_basis(k, mesh.dx, mesh.dy)
    quad = build_quadrature(k, mesh.dx, mesh.dy)
    bc = BoundarySpec.periodic()

    violations = 0
    worst_q = np.inf
    for _ in range(n_fields):
        coeffs = _random_admissible_field(rng, mesh, basis, quad, eos)
        jt = cell_average_rhs_field(coeffs, mesh, basis, quad, bc, eos, 0.0)
        sig = sigma_max_field(coeffs, mesh, basis, quad, bc, eos, 0.0)
        # dt bound: dt * (|E|/|K|) (a + sigma) < varpi_E^q / omega_q, the
        # tightest over edges; on a uniform mesh this collapses to
        # omega_hat_1 / ((1/dx + 1/dy)(a + sigma_max)).
        dt = safety * quad.omega_hat1 / ((1.0 / mesh.dx + 1.0 / mesh.dy) * (1.0 + sig))
        umean = coeffs[..., 0] + dt * jt
        rep = st.g1_report(umean.reshape(-1, 8))
        violations += int(np.sum(~rep.admissible))
        worst_q = min(worst_q, float(np.min(rep.q_margin)))
    return violations, worst_q


def _random_rough_projection(rng, mesh, basis, quad, eos):
    """Project a random rough primitive field; means admissible, points maybe not."""
    from .grid import project_field

    kx1, ky1, kx2, ky2 = rng.integers(1, 4, size=4)
    ph1, ph2, ph3 = rng.uniform(0.0, 2.0 * np.pi, size=3)
    rho0 = np.exp(rng.uniform(np.log(1e-3), np.log(10.0)))
    p0 = np.exp(rng.uniform(np.log(1e-4), np.log(10.0)))
    bamp = np.exp(rng.uniform(np.log(1e-2), np.log(30.0)))
    vmax = rng.uniform(0.1, 0.999)
    # amplitude factors keep the pointwise field admissible while leaving
    # large inter-cell jumps for the projection to produce
    two_pi = 2.0 * np.pi

    def prim_fn(x, y):
        sx = np.sin(two_pi * (kx1 * x + ky1 * y) + ph1)
        cy = np.cos(two_pi * (kx2 * x - ky2 * y) + ph2)
        out = np.empty(np.broadcast(x, y).shape + (8,))
        out[..., st.IRHO] = rho0 * (1.0 + 0.9 * sx) + 1e-8
        speed = vmax * (0.5 + 0.5 * cy)
        angp = ph3 + two_pi * (x + 2 * y)
        out[..., st.IV1] = speed * np.cos(angp) * 0.8
        out[..., st.IV2] = speed * np.sin(angp) * 0.8
        out[..., st.IV3] = speed * 0.3
        out[..., st.IB1] = bamp * np.sin(two_pi * ky2 * y + ph2)
        out[..., st.IB2] = bamp * np.cos(two_pi * kx1 * x + ph1)
        out[..., st.IB3] = bamp * sx * 0.5
        out[..., st.IP] = p0 * (1.0 + 0.9 * cy) + 1e-10
        return out

    return project_field(prim_fn, mesh, basis, eos=eos, conserved=False)


def _random_admissible_field(rng, mesh, basis, quad, eos):
    """Project a random rough primitive field and limit it into G_h^k."""
    from .pcp_limiter import limit_field_array

    coeffs = _random_rough_projection(rng, mesh, basis, quad, eos)
    eps = 1e-13 * np.maximum(1.0, coeffs[..., st.IE, 0])
    return limit_field_array(coeffs, basis, quad, eps)


def audit_limiter_conservation(n_fields=1000, nx=6, ny=5, seed=29,
                               gamma=5.0 / 3.0, k=2, tvb_m=1.0):
    """Worst relative cell-mean drift over limiter invocations.

    Each trial projects a rough admissible-mean field and pushes it
    through the slope limiter and then the admissibility limiter; both
    must preserve every cell mean. Returns the largest
    |mean_out - mean_in| / max(1, |mean_in|) seen.
    """
    from .grid import CartesianMesh, build_basis, build_quadrature
    from .pcp_limiter import limit_field_array, oscillation_limit_array

    rng = np.random.default_rng(seed)
    eos = EosSpec(gamma=gamma)
    mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), nx, ny)
    basis = build_basis(k, mesh.dx, mesh.dy)
    quad = build_quadrature(k, mesh.dx, mesh.dy)
    worst = 0.0
    for _ in range(n_fields):
        coeffs = _random_rough_projection(rng, mesh, basis, quad, eos)
        means = coeffs[..., 0].copy()
        out = oscillation_limit_array(coeffs, mesh, basis, quad, tvb_m)
        eps = 1e-13 * np.maximum(1.0, coeffs[..., st.IE, 0])
        out = limit_field_array(out, basis, quad, eps)
        drift = np.abs(out[..., 0] - means) / np.maximum(1.0, np.abs(means))
        worst = max(worst, float(drift.max()))
    return worst
