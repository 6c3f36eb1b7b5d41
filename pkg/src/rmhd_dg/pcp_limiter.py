"""Pointwise admissibility limiter and TVB slope limiter.

The admissibility limiter rescales each cell polynomial toward its cell
mean in three stages until rest-mass density, q = E - sqrt(D^2 + |m|^2),
and the Psi functional (with the eps-shifted energy) are nonnegative at
every point of the admissibility point set. Only deviations are scaled,
so cell means are preserved exactly; the third stage scales all eight
components by one common factor, which keeps the in-plane magnetic block
locally divergence-free. The cell mean itself must already be admissible
with margin eps - a violation means the time step or the scheme is
broken, and raises.

The slope limiter is a conventional TVB minmod on the linear modes of
cells flagged by a mean-jump indicator, with quadratic modes zeroed in
flagged cells. The in-plane magnetic block cannot be minmodded
componentwise without breaking the divergence-free constraint, so it is
only scaled uniformly toward its mean by the most restrictive of its own
minmod ratios.
"""

import numpy as np

from . import state as st
from ._kernels import pcp_limit_kernel
from .dg_operator import FieldState, fill_ghosts

_SQRT3 = np.sqrt(3.0)


def _sk_modes(basis, quad):
    return basis.eval_modes(quad.sk_pts)


def pcp_limit_cell(cell_coeffs, basis, quad, eps):
    """Limit one cell's (8, M) coefficient block; returns a new block."""
    C = np.array(cell_coeffs, dtype=np.float64)[None, None]
    flags = np.zeros((1, 1), dtype=np.int8)
    eps_arr = np.full((1, 1), float(eps))
    nbad = pcp_limit_kernel(C, _sk_modes(basis, quad), eps_arr, flags)
    if nbad:
        raise st.InadmissibleStateError(
            "cell mean outside the eps-admissible set; the limiter can "
            "only pull points toward an admissible mean")
    return C[0, 0]


def limit_field_array(coeffs, basis, quad, eps, flags=None):
    """Apply the admissibility limiter cellwise; returns new coefficients.

    eps is a scalar or an (ny, nx) array of per-cell margins. flags, if
    given, is an (ny, nx) int8 array that receives 1 in rescaled cells.
    """
    C = np.array(coeffs, dtype=np.float64)
    ny, nx = C.shape[:2]
    eps_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(eps, dtype=np.float64), (ny, nx)))
    if flags is None:
        flags = np.zeros((ny, nx), dtype=np.int8)
    else:
        flags[...] = 0
    nbad = pcp_limit_kernel(C, _sk_modes(basis, quad), eps_arr, flags)
    if nbad:
        cells = np.argwhere(flags == -1)
        shown = ", ".join(f"({j}, {i})" for j, i in cells[:5])
        raise st.InadmissibleStateError(
            f"{nbad} cell mean(s) outside the eps-admissible set, first "
            f"at {shown}; inadmissible means indicate a CFL or scheme "
            "violation, not a limiter task")
    return C


def limit_field(state, eps, flags=None):
    """Field-level admissibility limiter; returns a new FieldState."""
    out = limit_field_array(state.coeffs, state.basis, state.quad, eps,
                            flags=flags)
    return FieldState(out, state.mesh, state.basis, state.quad, t=state.t)


def _minmod3(a, b, c):
    s = np.sign(a)
    same = (s == np.sign(b)) & (s == np.sign(c))
    mag = np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c)))
    return np.where(same, s * mag, 0.0)


def oscillation_limit_array(coeffs, mesh, basis, quad, tvb_m, bc=None,
                            t=0.0, flags=None):
    """TVB minmod limiting of jump-flagged cells; returns new coefficients.

    A cell is flagged when the cell-mean jump to any face neighbor exceeds
    tvb_m * h^2 * (1 + |mean|) in any component, h being the cell size
    normal to that face. In flagged cells each linear mode is replaced by
    the TVB-modified minmod of its edge deviation against the neighbor
    mean differences (deviations below the tvb_m * h^2 threshold pass
    through), quadratic modes are zeroed, and the in-plane magnetic
    deviation is scaled by the smallest of its own four minmod ratios.
    Neighbor means come from bc's ghost cells when given, otherwise from
    edge replication. tvb_m <= 0 disables. flags, if given, receives 1 in
    flagged cells.
    """
    out = np.array(coeffs, dtype=np.float64)
    ny, nx = mesh.ny, mesh.nx
    if flags is None:
        flags = np.zeros((ny, nx), dtype=np.int8)
    else:
        flags[...] = 0
    if tvb_m <= 0.0 or basis.k == 0:
        return out

    if bc is not None:
        mbar = fill_ghosts(out, bc, mesh, basis, t)[..., 0]
    else:
        mbar = np.pad(out[..., 0], ((1, 1), (1, 1), (0, 0)), mode="edge")
    ubar = mbar[1:-1, 1:-1]
    d_w = ubar - mbar[1:-1, :-2]
    d_e = mbar[1:-1, 2:] - ubar
    d_s = ubar - mbar[:-2, 1:-1]
    d_n = mbar[2:, 1:-1] - ubar

    scale = 1.0 + np.abs(ubar)
    thx = tvb_m * mesh.dx ** 2 * scale
    thy = tvb_m * mesh.dy ** 2 * scale
    trouble = (
        ((np.abs(d_w) > thx) | (np.abs(d_e) > thx))
        | ((np.abs(d_s) > thy) | (np.abs(d_n) > thy))
    ).any(axis=-1)
    if not trouble.any():
        return out

    exps = [tuple(e) for e in basis.exponents]
    ix = exps.index((1, 0))
    iy = exps.index((0, 1))
    quads = [m for m, e in enumerate(exps) if e[0] + e[1] == 2]

    # deviation of the linear reconstruction at the face midpoints
    devx = _SQRT3 * out[..., ix]
    devy = _SQRT3 * out[..., iy]
    newx = np.where(np.abs(devx) <= thx, devx, _minmod3(devx, d_e, d_w))
    newy = np.where(np.abs(devy) <= thy, devy, _minmod3(devy, d_n, d_s))

    jj, ii = np.nonzero(trouble)
    flags[jj, ii] = 1
    for r in (st.ID, st.IM1, st.IM2, st.IM3, st.IB3, st.IE):
        out[jj, ii, r, ix] = newx[jj, ii, r] / _SQRT3
        out[jj, ii, r, iy] = newy[jj, ii, r] / _SQRT3
        for m in quads:
            out[jj, ii, r, m] = 0.0

    safe_x = np.where(devx == 0.0, 1.0, devx)
    safe_y = np.where(devy == 0.0, 1.0, devy)
    rx = np.where(devx == 0.0, 1.0, newx / safe_x)
    ry = np.where(devy == 0.0, 1.0, newy / safe_y)
    beta = np.minimum(
        np.minimum(rx[..., st.IB1], rx[..., st.IB2]),
        np.minimum(ry[..., st.IB1], ry[..., st.IB2]),
    )
    beta = np.clip(beta, 0.0, 1.0)
    out[jj, ii, st.IB1, 1:] *= beta[jj, ii, None]
    out[jj, ii, st.IB2, 1:] *= beta[jj, ii, None]
    return out


def oscillation_limit(state, tvb_m, bc=None, flags=None):
    """Field-level TVB limiter; returns a new FieldState."""
    out = oscillation_limit_array(state.coeffs, state.mesh, state.basis,
                                  state.quad, tvb_m, bc=bc, t=state.t,
                                  flags=flags)
    return FieldState(out, state.mesh, state.basis, state.quad, t=state.t)
