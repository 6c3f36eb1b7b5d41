"""Compiled inner loops: theta recovery, fluxes, assembly, limiting.

These mirror the reference implementations in state.py/physics.py and are
cross-validated against them in the tests. The recovery is a safeguarded
Newton iteration (bracketing bisection as fallback inside the same loop)
that terminates once the residual sits at its evaluation noise floor; it
is a pure function of the input state, so reruns and restarts retrace
identical arithmetic. Lanes that fail to converge are flagged instead of
raising so the caller can re-solve them with the reference bisection and
keep uniform error reporting.

The residual pipeline runs in two phases so recovery failures can be
patched or reported with cell/point locations in between: phase one
evaluates the modal expansions at quadrature points and recovers
primitives; phase two assembles the volume, edge-flux, and source-jump
contributions cell by cell without large temporaries.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _recover_core(d, m1, m2, m3, b1, b2, b3, e, gamma, warm):
    """Solve for theta = rho H W^2 of one conserved state.

    warm > 0 seeds the iteration (e.g. with a neighboring point's theta);
    the bracketing safeguards keep convergence global for any seed, so
    this only changes the iteration count, not the solution. Returns
    (ok, theta, rho, v1, v2, v3, p); ok = 0 flags inadmissible or stalled
    states, whose other outputs are meaningless.
    """
    c = (gamma - 1.0) / gamma
    m2s = m1 * m1 + m2 * m2 + m3 * m3
    b2s = b1 * b1 + b2 * b2 + b3 * b3
    mbs = m1 * b1 + m2 * b2 + m3 * b3
    mb2 = mbs * mbs

    theta = e - 0.5 * b2s
    if not (theta > 0.0) or not (d > 0.0):
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    if warm > 0.0:
        theta = warm

    lo = 0.0
    hi = 0.0
    have_hi = False
    ok = 0
    for _ in range(60):
        A = theta + b2s
        invtA = 1.0 / (theta * A)
        inv_denom = invtA * invtA
        v2 = (theta * theta * m2s + (2.0 * theta + b2s) * mb2) * inv_denom
        if not (v2 < 1.0):
            # superluminal: theta below the valid range, move up
            lo = theta
            theta = 0.5 * (theta + hi) if have_hi else 2.0 * theta
            continue
        u = 1.0 - v2
        su = np.sqrt(u)
        mb2t = mb2 * inv_denom * (A * A)
        f = theta - c * (theta * u - d * su) + b2s - 0.5 * (b2s * u + mb2t) - e
        if f < 0.0:
            lo = theta
        else:
            hi = theta
            have_hi = True
        dv2 = (2.0 * theta * m2s + 2.0 * mb2 - v2 * 2.0 * theta * A * (A + theta)) * inv_denom
        fp = (
            1.0
            - c * (u - theta * dv2 + d * dv2 * (0.5 / su))
            + 0.5 * b2s * dv2
            + mb2t * (invtA * A)
        )
        tn = theta - f / fp
        good = np.isfinite(tn) and fp > 0.0 and tn > lo
        if good and have_hi and tn >= hi:
            good = False
        # once |f| reaches the evaluation noise of its largest terms, take
        # the final Newton polish step and stop
        fscale = abs(e) + b2s + mb2t + theta
        if abs(f) <= 1e-15 * fscale:
            if good:
                theta = tn
            ok = 1
            break
        if not good:
            if have_hi:
                tn = 0.5 * (lo + hi)
            elif f < 0.0:
                tn = 2.0 * theta
            else:
                tn = 0.5 * theta
        if tn == theta:
            ok = 1
            break
        if abs(tn - theta) <= 1e-14 * tn:
            theta = tn
            ok = 1
            break
        theta = tn
    if ok == 0 and have_hi and lo > 0.0 and hi - lo <= 1e-12 * hi:
        theta = hi
        ok = 1
    if ok == 0:
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0

    A = theta + b2s
    invtA = 1.0 / (theta * A)
    mbt = mbs * invtA          # (m.B)/theta * (1/A)
    invA = invtA * theta       # 1/A
    v1 = m1 * invA + mbt * b1
    v2c = m2 * invA + mbt * b2
    v3 = m3 * invA + mbt * b3
    vsq = v1 * v1 + v2c * v2c + v3 * v3
    if not (vsq < 1.0):
        return 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    w2i = 1.0 - vsq
    sw = np.sqrt(w2i)
    rho = d * sw
    p = c * (theta * w2i - rho)
    return 1, theta, rho, v1, v2c, v3, p


@njit(cache=True)
def recover_theta_prim(U, gamma, out_prim, out_theta, out_ok):
    """theta and primitives for each row of U (n, 8).

    out_ok: 1 converged, 0 failed (inadmissible or stalled). Failed rows
    leave out_prim unspecified.
    """
    n = U.shape[0]
    for i in range(n):
        ok, theta, rho, v1, v2, v3, p = _recover_core(
            U[i, 0], U[i, 1], U[i, 2], U[i, 3],
            U[i, 4], U[i, 5], U[i, 6], U[i, 7], gamma, -1.0,
        )
        out_ok[i] = ok
        if ok == 1:
            out_prim[i, 0] = rho
            out_prim[i, 1] = v1
            out_prim[i, 2] = v2
            out_prim[i, 3] = v3
            out_prim[i, 4] = U[i, 4]
            out_prim[i, 5] = U[i, 5]
            out_prim[i, 6] = U[i, 6]
            out_prim[i, 7] = p
            out_theta[i] = theta


@njit(cache=True, fastmath=True)
def _flux_x_into(prim, gog1, out):
    """x-flux from one primitive row; gog1 = gamma / (gamma - 1)."""
    rho = prim[0]
    v1 = prim[1]
    v2 = prim[2]
    v3 = prim[3]
    b1 = prim[4]
    b2 = prim[5]
    b3 = prim[6]
    p = prim[7]
    v2s = v1 * v1 + v2 * v2 + v3 * v3
    w2i = 1.0 - v2s
    invw2i = 1.0 / w2i
    vB = v1 * b1 + v2 * b2 + v3 * b3
    b2s = b1 * b1 + b2 * b2 + b3 * b3
    thb = (rho + gog1 * p) * invw2i + b2s
    ptot = p + 0.5 * (w2i * b2s + vB * vB)
    mm1 = thb * v1 - vB * b1
    mm2 = thb * v2 - vB * b2
    mm3 = thb * v3 - vB * b3
    s1 = b1 * w2i + vB * v1
    s2 = b2 * w2i + vB * v2
    s3 = b3 * w2i + vB * v3
    W = np.sqrt(invw2i)
    out[0] = rho * W * v1
    out[1] = v1 * mm1 - b1 * s1 + ptot
    out[2] = v1 * mm2 - b1 * s2
    out[3] = v1 * mm3 - b1 * s3
    out[4] = 0.0
    out[5] = v1 * b2 - b1 * v2
    out[6] = v1 * b3 - b1 * v3
    out[7] = mm1


@njit(cache=True, fastmath=True)
def _flux_y_into(prim, gog1, out):
    """y-flux from one primitive row; gog1 = gamma / (gamma - 1)."""
    rho = prim[0]
    v1 = prim[1]
    v2 = prim[2]
    v3 = prim[3]
    b1 = prim[4]
    b2 = prim[5]
    b3 = prim[6]
    p = prim[7]
    v2s = v1 * v1 + v2 * v2 + v3 * v3
    w2i = 1.0 - v2s
    invw2i = 1.0 / w2i
    vB = v1 * b1 + v2 * b2 + v3 * b3
    b2s = b1 * b1 + b2 * b2 + b3 * b3
    thb = (rho + gog1 * p) * invw2i + b2s
    ptot = p + 0.5 * (w2i * b2s + vB * vB)
    mm1 = thb * v1 - vB * b1
    mm2 = thb * v2 - vB * b2
    mm3 = thb * v3 - vB * b3
    s1 = b1 * w2i + vB * v1
    s2 = b2 * w2i + vB * v2
    s3 = b3 * w2i + vB * v3
    W = np.sqrt(invw2i)
    out[0] = rho * W * v2
    out[1] = v2 * mm1 - b2 * s1
    out[2] = v2 * mm2 - b2 * s2 + ptot
    out[3] = v2 * mm3 - b2 * s3
    out[4] = v2 * b1 - b2 * v1
    out[5] = 0.0
    out[6] = v2 * b3 - b2 * v3
    out[7] = mm2


@njit(cache=True)
def fluxes_xy(prim, gamma, Fx, Fy):
    """x- and y-fluxes for each primitive row (n, 8)."""
    gog1 = gamma / (gamma - 1.0)
    n = prim.shape[0]
    for i in range(n):
        _flux_x_into(prim[i], gog1, Fx[i])
        _flux_y_into(prim[i], gog1, Fy[i])


@njit(cache=True, fastmath=True)
def eval_recover_points(coeffs, V, gamma, out_prim, out_ok, theta_io, use_warm):
    """Evaluate modal cells at reference points and recover primitives.

    coeffs: (ny, nx, 8, M), V: (npts, M), out_prim: (ny, nx, npts, 8),
    out_ok: (ny, nx, npts) int8. theta_io (ny, nx, npts) seeds each point's
    iteration when use_warm is true (stage-to-stage cache) and always
    receives the converged thetas; with use_warm false the previous point
    in the fixed traversal order seeds instead. Returns the number of
    failed points.
    """
    ny, nx = coeffs.shape[0], coeffs.shape[1]
    M = coeffs.shape[3]
    npts = V.shape[0]
    u = np.empty(8)
    nfail = 0
    chain = -1.0
    for j in range(ny):
        for i in range(nx):
            C = coeffs[j, i]
            for q in range(npts):
                for cc in range(8):
                    s = 0.0
                    for m in range(M):
                        s += C[cc, m] * V[q, m]
                    u[cc] = s
                warm = theta_io[j, i, q] if use_warm else chain
                ok, theta, rho, v1, v2, v3, p = _recover_core(
                    u[0], u[1], u[2], u[3], u[4], u[5], u[6], u[7], gamma, warm
                )
                chain = theta if ok == 1 else -1.0
                theta_io[j, i, q] = chain
                out_ok[j, i, q] = ok
                if ok == 1:
                    P = out_prim[j, i, q]
                    P[0] = rho
                    P[1] = v1
                    P[2] = v2
                    P[3] = v3
                    P[4] = u[4]
                    P[5] = u[5]
                    P[6] = u[6]
                    P[7] = p
                else:
                    nfail += 1
    return nfail


@njit(cache=True, fastmath=True)
def assemble_rhs(padded, prim_edge, prim_int, Ve, Gxw, Gyw, gauss_w, wj,
                 dxoa, dyoa, gamma, a, R, sig):
    """Accumulate volume, LF edge-flux, and source-jump terms into R.

    All quadrature weights arrive with 1/|K| folded in, so R accumulates
    dc/dt directly. padded: ghost-padded coefficients (ny+2, nx+2, 8, M);
    prim_edge: primitives at the edge points of every padded cell
    (ny+2, nx+2, 4, Q, 8); prim_int: primitives at interior Gauss points
    of real cells (ny, nx, nQ, 8); Ve: scalar modes at edge points
    (4, Q, M); Gxw/Gyw: physical gradients at interior points times w_q
    (nQ, M); wj: (1/2)|E| w_q / |K| per edge (4, Q); dxoa/dyoa: dx/|K| and
    dy/|K|. R must be zero on entry; sig receives the per-cell max of
    |<n, B jump>| / (2 sqrt(rho_int H_int)).
    """
    ny = R.shape[0]
    nx = R.shape[1]
    M = R.shape[3]
    Q = Ve.shape[1]
    nQ = Gxw.shape[0]
    gog1 = gamma / (gamma - 1.0)

    uL = np.empty(8)
    uR = np.empty(8)
    fxa = np.empty(8)
    fxb = np.empty(8)
    fh = np.empty(8)

    # vertical edges between padded columns i and i+1, i = 0..nx
    for j in range(ny):
        pj = j + 1
        for i in range(nx + 1):
            CL = padded[pj, i]
            CR = padded[pj, i + 1]
            for q in range(Q):
                for cc in range(8):
                    sL = 0.0
                    sR = 0.0
                    for m in range(M):
                        sL += CL[cc, m] * Ve[1, q, m]
                        sR += CR[cc, m] * Ve[3, q, m]
                    uL[cc] = sL
                    uR[cc] = sR
                _flux_x_into(prim_edge[pj, i, 1, q], gog1, fxa)
                _flux_x_into(prim_edge[pj, i + 1, 3, q], gog1, fxb)
                for cc in range(8):
                    fh[cc] = 0.5 * (fxa[cc] + fxb[cc] - a * (uR[cc] - uL[cc]))
                wq = dyoa * gauss_w[q]
                if i >= 1:
                    for cc in range(8):
                        t = wq * fh[cc]
                        for m in range(M):
                            R[j, i - 1, cc, m] -= t * Ve[1, q, m]
                if i <= nx - 1:
                    for cc in range(8):
                        t = wq * fh[cc]
                        for m in range(M):
                            R[j, i, cc, m] += t * Ve[3, q, m]

    # horizontal edges between padded rows j and j+1, j = 0..ny
    for j in range(ny + 1):
        for i in range(nx):
            pi = i + 1
            CB = padded[j, pi]
            CT = padded[j + 1, pi]
            for q in range(Q):
                for cc in range(8):
                    sB = 0.0
                    sT = 0.0
                    for m in range(M):
                        sB += CB[cc, m] * Ve[2, q, m]
                        sT += CT[cc, m] * Ve[0, q, m]
                    uL[cc] = sB
                    uR[cc] = sT
                _flux_y_into(prim_edge[j, pi, 2, q], gog1, fxa)
                _flux_y_into(prim_edge[j + 1, pi, 0, q], gog1, fxb)
                for cc in range(8):
                    fh[cc] = 0.5 * (fxa[cc] + fxb[cc] - a * (uR[cc] - uL[cc]))
                wq = dxoa * gauss_w[q]
                if j >= 1:
                    for cc in range(8):
                        t = wq * fh[cc]
                        for m in range(M):
                            R[j - 1, i, cc, m] -= t * Ve[2, q, m]
                if j <= ny - 1:
                    for cc in range(8):
                        t = wq * fh[cc]
                        for m in range(M):
                            R[j, i, cc, m] += t * Ve[0, q, m]

    # volume term and one-sided source-jump term, cell by cell
    for j in range(ny):
        pj = j + 1
        for i in range(nx):
            pi = i + 1
            for q in range(nQ):
                _flux_x_into(prim_int[j, i, q], gog1, fxa)
                _flux_y_into(prim_int[j, i, q], gog1, fxb)
                for cc in range(8):
                    t1 = fxa[cc]
                    t2 = fxb[cc]
                    for m in range(M):
                        R[j, i, cc, m] += t1 * Gxw[q, m] + t2 * Gyw[q, m]
            smax = 0.0
            for e in range(4):
                if e == 0:
                    nj = pj - 1
                    ni = pi
                    fe = 2
                elif e == 1:
                    nj = pj
                    ni = pi + 1
                    fe = 3
                elif e == 2:
                    nj = pj + 1
                    ni = pi
                    fe = 0
                else:
                    nj = pj
                    ni = pi - 1
                    fe = 1
                for q in range(Q):
                    po = prim_edge[pj, pi, e, q]
                    pe = prim_edge[nj, ni, fe, q]
                    if e == 0:
                        jmp = -(pe[5] - po[5])
                    elif e == 1:
                        jmp = pe[4] - po[4]
                    elif e == 2:
                        jmp = pe[5] - po[5]
                    else:
                        jmp = -(pe[4] - po[4])
                    v1 = po[1]
                    v2 = po[2]
                    v3 = po[3]
                    b1 = po[4]
                    b2 = po[5]
                    b3 = po[6]
                    v2s = v1 * v1 + v2 * v2 + v3 * v3
                    vB = v1 * b1 + v2 * b2 + v3 * b3
                    s1 = (1.0 - v2s) * b1 + vB * v1
                    s2 = (1.0 - v2s) * b2 + vB * v2
                    s3 = (1.0 - v2s) * b3 + vB * v3
                    w_ = wj[e, q] * jmp
                    for m in range(M):
                        t = w_ * Ve[e, q, m]
                        R[j, i, 1, m] -= t * s1
                        R[j, i, 2, m] -= t * s2
                        R[j, i, 3, m] -= t * s3
                        R[j, i, 4, m] -= t * v1
                        R[j, i, 5, m] -= t * v2
                        R[j, i, 6, m] -= t * v3
                        R[j, i, 7, m] -= t * vB
                    rhoH = po[0] + gog1 * po[7]
                    sg = 0.5 * abs(jmp) / np.sqrt(rhoH)
                    if sg > smax:
                        smax = sg
            sig[j, i] = smax


@njit(cache=True)
def _q_pt(d, m1, m2, m3, e):
    return e - np.sqrt(d * d + (m1 * m1 + m2 * m2 + m3 * m3))


@njit(cache=True)
def _psi_eps_pt(d, m1, m2, m3, b1, b2, b3, e, eps):
    """Psi_eps of one state, mirroring the reference operation order.

    No fastmath here: limiter decisions near the admissibility boundary
    must agree with the numpy predicate that audits the output.
    """
    ee = e - eps
    m2n = m1 * m1 + m2 * m2 + m3 * m3
    b2n = b1 * b1 + b2 * b2 + b3 * b3
    mb = m1 * b1 + m2 * b2 + m3 * b3
    bme = b2n - ee
    arg = bme * bme + 3.0 * (ee * ee - d * d - m2n)
    if arg < 0.0:
        arg = 0.0
    phi = np.sqrt(arg)
    arg2 = phi + bme
    if arg2 < 0.0:
        arg2 = 0.0
    root = np.sqrt(arg2)
    return (phi - 2.0 * bme) * root - np.sqrt(13.5 * (d * d * b2n + mb * mb))


@njit(cache=True)
def pcp_limit_kernel(C, Vsk, eps, flags):
    """Three-stage scaling toward the cell mean, in place, cell by cell.

    C: (ny, nx, 8, M) modal coefficients; Vsk: (P, M) scalar modes at the
    admissibility point set; eps: (ny, nx); flags: (ny, nx) int8 output,
    1 where any stage rescaled the cell, -1 where the cell mean itself
    fails the precondition (left untouched, counted in the return value).
    Stage targets sit a few ulps above eps so re-evaluating the limited
    polynomial still clears the exact predicate; the stage-3 factor gets
    the same treatment through a relative shrink of its certified value.
    """
    ny = C.shape[0]
    nx = C.shape[1]
    M = C.shape[3]
    P = Vsk.shape[0]
    uval = np.empty((P, 8))
    nbad = 0
    for j in range(ny):
        for i in range(nx):
            ek = eps[j, i]
            cell = C[j, i]
            dbar = cell[0, 0]
            qbar = _q_pt(dbar, cell[1, 0], cell[2, 0], cell[3, 0], cell[7, 0])
            psibar = _psi_eps_pt(dbar, cell[1, 0], cell[2, 0], cell[3, 0],
                                 cell[4, 0], cell[5, 0], cell[6, 0],
                                 cell[7, 0], ek)
            if not (dbar >= ek and qbar >= ek and psibar >= 0.0):
                flags[j, i] = -1
                nbad += 1
                continue

            umax = 1.0
            for p in range(P):
                for cc in range(8):
                    s = 0.0
                    for m in range(M):
                        s += cell[cc, m] * Vsk[p, m]
                    uval[p, cc] = s
                    a = abs(s)
                    if a > umax:
                        umax = a
            guard = 1e-14 * umax
            touched = 0

            # stage 1: rest-mass density
            dmin = uval[0, 0]
            for p in range(1, P):
                if uval[p, 0] < dmin:
                    dmin = uval[p, 0]
            if dmin < ek:
                th1 = (dbar - (ek + guard)) / (dbar - dmin)
                if th1 < 0.0:
                    th1 = 0.0
                elif th1 > 1.0:
                    th1 = 1.0
                for m in range(1, M):
                    cell[0, m] *= th1
                for p in range(P):
                    uval[p, 0] = dbar + th1 * (uval[p, 0] - dbar)
                touched = 1

            # stage 2: q, evaluated on the stage-1 output; q is concave in
            # U so the linear scaling factor is already on the safe side
            qmin = np.inf
            for p in range(P):
                qp = _q_pt(uval[p, 0], uval[p, 1], uval[p, 2], uval[p, 3],
                           uval[p, 7])
                if qp < qmin:
                    qmin = qp
            if qmin < ek:
                th2 = (qbar - (ek + guard)) / (qbar - qmin)
                if th2 < 0.0:
                    th2 = 0.0
                elif th2 > 1.0:
                    th2 = 1.0
                for cc in range(8):
                    if cc >= 4 and cc <= 6:
                        continue
                    for m in range(1, M):
                        cell[cc, m] *= th2
                    for p in range(P):
                        uval[p, cc] = cell[cc, 0] + th2 * (uval[p, cc] - cell[cc, 0])
                touched = 1

            # stage 3: Psi_eps, per-point bisection on the segment toward
            # the mean; the admissible-side endpoint is kept so the result
            # is certified, then shrunk by 1e-12 against re-evaluation noise
            th3 = 1.0
            for p in range(P):
                psip = _psi_eps_pt(uval[p, 0], uval[p, 1], uval[p, 2],
                                   uval[p, 3], uval[p, 4], uval[p, 5],
                                   uval[p, 6], uval[p, 7], ek)
                if psip >= 0.0:
                    continue
                lo = 0.0
                hi = 1.0
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    pm = _psi_eps_pt(
                        cell[0, 0] + mid * (uval[p, 0] - cell[0, 0]),
                        cell[1, 0] + mid * (uval[p, 1] - cell[1, 0]),
                        cell[2, 0] + mid * (uval[p, 2] - cell[2, 0]),
                        cell[3, 0] + mid * (uval[p, 3] - cell[3, 0]),
                        cell[4, 0] + mid * (uval[p, 4] - cell[4, 0]),
                        cell[5, 0] + mid * (uval[p, 5] - cell[5, 0]),
                        cell[6, 0] + mid * (uval[p, 6] - cell[6, 0]),
                        cell[7, 0] + mid * (uval[p, 7] - cell[7, 0]),
                        ek)
                    if pm >= 0.0:
                        lo = mid
                    else:
                        hi = mid
                    if hi - lo <= 1e-14:
                        break
                if lo < th3:
                    th3 = lo
            if th3 < 1.0:
                th3 *= 1.0 - 1e-12
                for cc in range(8):
                    for m in range(1, M):
                        cell[cc, m] *= th3
                touched = 1

            if touched:
                flags[j, i] = 1
    return nbad


def recover_prim_batch(U, eos, tol=1e-12):
    """Fast-path recovery over rows of U with reference fallback.

    Returns (prim, theta). Rows the Newton kernel cannot converge are
    re-solved with the reference bisection, which also produces the
    documented exceptions for genuinely inadmissible states.
    """
    from . import state as st

    U = np.ascontiguousarray(U, dtype=np.float64)
    flat = U.reshape(-1, 8)
    prim = np.empty_like(flat)
    theta = np.empty(flat.shape[0])
    ok = np.empty(flat.shape[0], dtype=np.int8)
    recover_theta_prim(flat, eos.gamma, prim, theta, ok)
    bad = ok == 0
    if np.any(bad):
        theta_bad = st.theta_from_conserved(flat[bad], eos, tol=tol)
        prim[bad] = st.primitives_at_theta(flat[bad], theta_bad, eos)
        theta[bad] = theta_bad
    return prim.reshape(U.shape), theta.reshape(U.shape[:-1])
