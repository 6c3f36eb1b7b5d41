"""Semi-discrete DG right-hand side for the RMHD system.

The residual assembles three pieces per cell: local Lax-Friedrichs edge
fluxes (computed once per interior edge, scattered to both cells with
opposite signs), the one-sided symmetrization source-jump term driven by
the normal jump of B across each edge, and the interior flux-gradient
quadrature. The (diagonal) mass matrix is inverted exactly and the
magnetic coefficient rows are projected back onto the locally
divergence-free subspace, which is equivalent to testing against the
divergence-free vector basis.

Boundary handling works through one layer of ghost cells holding modal
coefficients; see BoundarySpec. Ghost corner cells are filled with copies
of the interior corner cells: they are never assembled, but keeping them
admissible lets the point evaluation and recovery run over the whole
padded array without masking.
"""

import warnings

import numpy as np

from . import physics as ph
from . import state as st
from ._kernels import assemble_rhs, eval_recover_points
from .eos import enthalpy
from .grid import evaluate

_SIDES = ("left", "right", "bottom", "top")
_KINDS = ("periodic", "outflow", "reflect")


class BoundarySpec:
    """Per-side boundary kinds.

    Each side is "periodic", "outflow", "reflect", or a callable
    fn(interior_adjacent, mesh, basis, t) -> ghost coefficients with the
    same shape as interior_adjacent (n_cells_along_side, 8, M); callables
    realize inflow and mixed prescriptions. Periodic sides must pair up.
    """

    def __init__(self, left="periodic", right="periodic",
                 bottom="periodic", top="periodic"):
        self.left = left
        self.right = right
        self.bottom = bottom
        self.top = top
        for name in _SIDES:
            kind = getattr(self, name)
            if not callable(kind) and kind not in _KINDS:
                raise ValueError(f"unknown boundary kind {kind!r} on side {name}")
        if (self.left == "periodic") != (self.right == "periodic"):
            raise ValueError("periodic sides must pair: left/right")
        if (self.bottom == "periodic") != (self.top == "periodic"):
            raise ValueError("periodic sides must pair: bottom/top")

    @classmethod
    def periodic(cls):
        return cls()

    @classmethod
    def outflow(cls):
        return cls(left="outflow", right="outflow", bottom="outflow", top="outflow")

    def __repr__(self):
        return (f"BoundarySpec(left={self.left!r}, right={self.right!r}, "
                f"bottom={self.bottom!r}, top={self.top!r})")


class FieldState:
    """Bundle of the discrete solution and its discretization objects."""

    def __init__(self, coeffs, mesh, basis, quad, t=0.0):
        self.coeffs = coeffs
        self.mesh = mesh
        self.basis = basis
        self.quad = quad
        self.t = float(t)


def mode_parity(basis, axis):
    """Signs (-1)^a (axis 0) or (-1)^b (axis 1) per scalar mode."""
    return np.array([(-1.0) ** e[axis] for e in basis.exponents])


def mirror_coeffs(cell_coeffs, basis, axis):
    """Mirror polynomials across a cell face normal to the given axis.

    Flips the odd modes in that coordinate and the sign of the normal
    velocity and magnetic components (conserved rows m_axis, B_axis).
    """
    out = cell_coeffs * mode_parity(basis, axis)
    comp = st.IM1 + axis
    out[..., comp, :] = -out[..., comp, :]
    out[..., st.IB1 + axis, :] = -out[..., st.IB1 + axis, :]
    return out


def fill_ghosts(coeffs, bc, mesh, basis, t, out=None):
    """Padded coefficient array (Ny+2, Nx+2, 8, M) with ghost cells set."""
    ny, nx = coeffs.shape[:2]
    if out is None:
        padded = np.empty((ny + 2, nx + 2) + coeffs.shape[2:])
    else:
        padded = out
    padded[1:-1, 1:-1] = coeffs

    def ghost(kind, interior, wrap, axis):
        if callable(kind):
            return kind(interior, mesh, basis, t)
        if kind == "periodic":
            return wrap
        if kind == "outflow":
            return interior
        return mirror_coeffs(interior, basis, axis)

    padded[1:-1, 0] = ghost(bc.left, coeffs[:, 0], coeffs[:, -1], 0)
    padded[1:-1, -1] = ghost(bc.right, coeffs[:, -1], coeffs[:, 0], 0)
    padded[0, 1:-1] = ghost(bc.bottom, coeffs[0, :], coeffs[-1, :], 1)
    padded[-1, 1:-1] = ghost(bc.top, coeffs[-1, :], coeffs[0, :], 1)

    # corners: admissible filler, never assembled
    padded[0, 0] = coeffs[0, 0]
    padded[0, -1] = coeffs[0, -1]
    padded[-1, 0] = coeffs[-1, 0]
    padded[-1, -1] = coeffs[-1, -1]
    return padded


def _ws_array(work, key, shape, dtype=np.float64):
    """Fetch a reusable buffer from the workspace dict, or allocate."""
    if work is None:
        return np.empty(shape, dtype=dtype)
    a = work.get(key)
    if a is None or a.shape != shape:
        a = np.empty(shape, dtype=dtype)
        work[key] = a
    return a


def _recover_at_points(coeffs, V, eos, where, prim, ok, theta, use_warm):
    """Primitives at reference points of every cell, with located errors.

    coeffs: (ny, nx, 8, M) contiguous, V: (npts, M). Failed points are
    re-solved with the reference bisection: genuinely inadmissible states
    raise with (cell_j, cell_i, point) attached, stalled-but-admissible
    ones are patched in place.
    """
    nfail = eval_recover_points(coeffs, V, eos.gamma, prim, ok, theta, use_warm)
    if nfail:
        for j, i, q in zip(*np.nonzero(ok == 0)):
            U = coeffs[j, i] @ V[q]
            try:
                tb = st.theta_from_conserved(U[None, :], eos)
            except (st.InadmissibleStateError, st.RecoveryConvergenceError) as exc:
                raise type(exc)(
                    f"recovery failed at {where}({j}, {i}, {q}): {exc}"
                ) from exc
            prim[j, i, q] = st.primitives_at_theta(U[None, :], tb, eos)[0]


def residual_field(coeffs, mesh, basis, quad, bc, eos, t, a=1.0,
                   return_sigma=False, work=None, warm=False):
    """dc/dt over the whole field; optionally per-cell max sigma_{K,E,q}.

    work: optional dict of reusable buffers for repeated calls on one
    discretization; the returned arrays then alias workspace buffers and
    are overwritten by the next call with the same dict, so consume them
    before that. warm=True additionally seeds each quadrature point's
    recovery with its theta from the previous call (valid only with a
    work dict carried between calls on nearby fields, e.g. stages of one
    time step); seeding changes iteration counts, not converged values.
    """
    ny, nx = mesh.ny, mesh.nx
    Q = quad.Q
    M = basis.scalar_dim
    area = mesh.cell_area
    nQ = quad.interior_pts.shape[0]

    padded = fill_ghosts(coeffs, bc, mesh, basis, t,
                         out=_ws_array(work, "padded", (ny + 2, nx + 2, 8, M)))

    V_edge = basis.eval_modes(quad.edge_pts)          # (4, Q, M)
    V_int = basis.eval_modes(quad.interior_pts)       # (Q^2, M)
    G_int = basis.eval_grad(quad.interior_pts)        # (Q^2, M, 2)

    use_warm = bool(warm) and work is not None
    prim_edge = _ws_array(work, "prim_edge", (ny + 2, nx + 2, 4 * Q, 8))
    ok_edge = _ws_array(work, "ok_edge", (ny + 2, nx + 2, 4 * Q), np.int8)
    th_edge = _ws_array(work, "theta_edge", (ny + 2, nx + 2, 4 * Q))
    _recover_at_points(padded, V_edge.reshape(4 * Q, M), eos,
                       "padded-cell edge point ", prim_edge, ok_edge,
                       th_edge, use_warm)
    prim_edge = prim_edge.reshape(ny + 2, nx + 2, 4, Q, 8)

    coeffs_c = np.ascontiguousarray(coeffs)
    prim_int = _ws_array(work, "prim_int", (ny, nx, nQ, 8))
    ok_int = _ws_array(work, "ok_int", (ny, nx, nQ), np.int8)
    th_int = _ws_array(work, "theta_int", (ny, nx, nQ))
    _recover_at_points(coeffs_c, V_int, eos, "interior point ",
                       prim_int, ok_int, th_int, use_warm)

    # 1/|K| (the inverse mass) is folded into every quadrature weight so
    # assemble_rhs accumulates dc/dt directly.
    Gxw = quad.interior_w[:, None] * G_int[..., 0]
    Gyw = quad.interior_w[:, None] * G_int[..., 1]
    wj = 0.5 / area * quad.edge_len[:, None] * quad.gauss_w[None, :]

    R = _ws_array(work, "rhs", (ny, nx, 8, M))
    R[...] = 0.0
    sig = _ws_array(work, "sigma", (ny, nx))
    assemble_rhs(padded, prim_edge, prim_int, V_edge, Gxw, Gyw,
                 quad.gauss_w, wj, mesh.dx / area, mesh.dy / area,
                 eos.gamma, a, R, sig)

    dcdt = _project_magblock_rows(R, basis)

    if not return_sigma:
        return dcdt
    return dcdt, sig.copy() if work is not None else sig


def _project_magblock_rows(dcdt, basis):
    sd = basis.scalar_dim
    stacked = np.concatenate([dcdt[..., st.IB1, :], dcdt[..., st.IB2, :]], axis=-1)
    stacked = stacked @ basis.divfree_projector.T
    dcdt[..., st.IB1, :] = stacked[..., :sd]
    dcdt[..., st.IB2, :] = stacked[..., sd:]
    return dcdt


def residual(state, bc, eos, a=1.0):
    return residual_field(state.coeffs, state.mesh, state.basis, state.quad,
                          bc, eos, state.t, a=a)


# (edge, neighbor offset, neighbor's facing edge, unit normal)
_EDGE_GEOM = [
    (0, (-1, 0), 2, (0.0, -1.0)),
    (1, (0, 1), 3, (1.0, 0.0)),
    (2, (1, 0), 0, (0.0, 1.0)),
    (3, (0, -1), 1, (-1.0, 0.0)),
]


def _edge_traces(coeffs, mesh, basis, quad, bc, t, e, fe, oj, oi):
    """Interior and exterior traces on one edge family: two (Ny,Nx,Q,8)."""
    ny, nx = mesh.ny, mesh.nx
    padded = fill_ghosts(coeffs, bc, mesh, basis, t)
    Uin = evaluate(padded, basis, quad.edge_pts[e])[1:ny + 1, 1:nx + 1]
    Uex = evaluate(padded, basis, quad.edge_pts[fe])[
        1 + oj:ny + 1 + oj, 1 + oi:nx + 1 + oi]
    return Uin, Uex


def cell_average_rhs_field(coeffs, mesh, basis, quad, bc, eos, t, a=1.0):
    """Mean-mode right-hand side built independently of residual_field.

    Uses the reference recovery and LF flux routines and assembles the two
    mean terms (edge fluxes and source-jump) one edge family at a time; the
    volume term integrates to zero against the constant test function.
    Shape (Ny, Nx, 8). This is the object the weak positivity statement
    constrains.
    """
    ny, nx = mesh.ny, mesh.nx
    out = np.zeros((ny, nx, 8))
    w = quad.gauss_w
    area = mesh.cell_area
    for e, (oj, oi), fe, n in _EDGE_GEOM:
        Uin, Uex = _edge_traces(coeffs, mesh, basis, quad, bc, t, e, fe, oj, oi)
        fhat = ph.lf_flux(Uin, Uex, n, a, eos)
        Sv = ph.source_vector(st.primitive_from_conserved(Uin, eos))
        nb = n[0] * (Uex[..., st.IB1] - Uin[..., st.IB1]) + n[1] * (
            Uex[..., st.IB2] - Uin[..., st.IB2]
        )
        per_pt = fhat + 0.5 * nb[..., None] * Sv
        out -= (quad.edge_len[e] / area) * np.einsum("q,yxqc->yxc", w, per_pt)
    return out


def cell_average_rhs(state, bc, eos, cell):
    """Mean right-hand side of a single cell (j, i)."""
    full = cell_average_rhs_field(state.coeffs, state.mesh, state.basis,
                                  state.quad, bc, eos, state.t)
    j, i = cell
    return full[j, i]


def sigma_max_field(coeffs, mesh, basis, quad, bc, eos, t):
    """Global max of sigma_{K,E,q} = |<n, B_int - B_ext>| / (2 sqrt(rho_in H_in)).

    Built on the reference recovery, independent of residual_field.
    """
    worst = 0.0
    for e, (oj, oi), fe, n in _EDGE_GEOM:
        Uin, Uex = _edge_traces(coeffs, mesh, basis, quad, bc, t, e, fe, oj, oi)
        prim_in = st.primitive_from_conserved(Uin, eos)
        rhoH = prim_in[..., st.IRHO] * enthalpy(
            eos, prim_in[..., st.IP], prim_in[..., st.IRHO]
        )
        nb = n[0] * (Uin[..., st.IB1] - Uex[..., st.IB1]) + n[1] * (
            Uin[..., st.IB2] - Uex[..., st.IB2]
        )
        worst = max(worst, float(np.max(0.5 * np.abs(nb) / np.sqrt(rhoH))))
    return worst


def compute_dt(state, cfl, eos, a=1.0):
    """Time step cfl / (a max_beta) * (1/dx + 1/dy)^-1 with max_beta = 1."""
    if cfl >= state.quad.omega_hat1:
        warnings.warn(
            f"cfl = {cfl} is not below omega_hat1 = {state.quad.omega_hat1:.6g}; "
            "the provable positivity bound does not cover this step size",
            stacklevel=2,
        )
    return cfl / a / (1.0 / state.mesh.dx + 1.0 / state.mesh.dy)
