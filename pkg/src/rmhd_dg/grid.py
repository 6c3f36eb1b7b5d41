"""Uniform Cartesian mesh, modal DG basis, quadrature and point sets.

Solution storage convention used across the package: a field is an ndarray
of shape (Ny, Nx, 8, M) holding modal coefficients of the 8 conserved
components over the orthonormal scalar basis (M = scalar_dim). Component
index order follows state.py. The in-plane magnetic pair (B1, B2) is kept
inside the locally divergence-free subspace: its stacked 2M coefficient
vector lies in the range of the projector built here, which every producer
of B coefficients (projection, DG residual) applies.

The scalar basis is orthonormal on the reference cell [-1/2, 1/2]^2 with
unit measure, so the element mass matrix is ident * dx * dy and the cell
mean is coefficient 0 of each component.
"""

import numpy as np


class CartesianMesh:
    """Uniform rectangular mesh on [x0,x1] x [y0,y1] with Nx x Ny cells."""

    def __init__(self, domain, nx, ny):
        x0, x1, y0, y1 = map(float, domain)
        nx, ny = int(nx), int(ny)
        if not (x1 > x0 and y1 > y0 and nx > 0 and ny > 0):
            raise ValueError("degenerate mesh")
        self.domain = (x0, x1, y0, y1)
        self.nx = nx
        self.ny = ny
        self.dx = (x1 - x0) / nx
        self.dy = (y1 - y0) / ny
        self.xc = x0 + self.dx * (np.arange(nx) + 0.5)
        self.yc = y0 + self.dy * (np.arange(ny) + 0.5)
        self.cell_area = self.dx * self.dy

    def phys_points(self, ref_pts):
        """Map reference points (npts, 2) into every cell.

        Returns x, y arrays of shape (Ny, Nx, npts).
        """
        ref_pts = np.asarray(ref_pts, dtype=float)
        shape = (self.ny, self.nx, len(ref_pts))
        x = np.broadcast_to(
            self.xc[None, :, None] + self.dx * ref_pts[None, None, :, 0], shape
        )
        y = np.broadcast_to(
            self.yc[:, None, None] + self.dy * ref_pts[None, None, :, 1], shape
        )
        return x, y

    def __repr__(self):
        return f"CartesianMesh(domain={self.domain}, nx={self.nx}, ny={self.ny})"


# 1D orthonormal Legendre modes on [-1/2, 1/2], unit weight.
_NORM1 = np.sqrt(12.0)
_NORM2 = np.sqrt(180.0)


def _leg1d(a, x):
    if a == 0:
        return np.ones_like(x)
    if a == 1:
        return _NORM1 * x
    if a == 2:
        return _NORM2 * (x * x - 1.0 / 12.0)
    raise ValueError(f"unsupported 1D degree {a}")


def _leg1d_deriv(a, x):
    if a == 0:
        return np.zeros_like(x)
    if a == 1:
        return np.full_like(x, _NORM1)
    if a == 2:
        return 2.0 * _NORM2 * x
    raise ValueError(f"unsupported 1D degree {a}")


# d/dx in the orthonormal basis: p1' = sqrt(12) p0, p2' = 2 sqrt(15) p1
_DERIV1D = np.zeros((3, 3))
_DERIV1D[0, 1] = _NORM1
_DERIV1D[1, 2] = 2.0 * np.sqrt(15.0)


def _scalar_exponents(k):
    # graded order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2)
    return [(a, b) for d in range(k + 1) for a in range(d, -1, -1) for b in [d - a]]


class DGBasis:
    """Modal basis of degree k with the divergence-free magnetic block.

    scalar modes: tensor products of 1D orthonormal Legendre polynomials,
    total degree <= k, on the reference cell. magblock: orthonormal basis
    of the subspace of (P^k)^2 whose physical divergence
    (1/dx) d_xi b1 + (1/dy) d_eta b2 vanishes identically, stored as
    stacked coefficient columns (2*scalar_dim, magblock_dim), together
    with the orthogonal projector onto that subspace.
    """

    def __init__(self, k, dx, dy):
        if k not in (0, 1, 2):
            raise ValueError(f"unsupported degree k={k}")
        if not (dx > 0.0 and dy > 0.0):
            raise ValueError("cell sizes must be positive")
        self.k = k
        self.dx = float(dx)
        self.dy = float(dy)
        self.exponents = _scalar_exponents(k)
        self.scalar_dim = len(self.exponents)

        sd = self.scalar_dim
        index = {e: i for i, e in enumerate(self.exponents)}
        Dx = np.zeros((sd, sd))
        Dy = np.zeros((sd, sd))
        for j, (a, b) in enumerate(self.exponents):
            for c in range(3):
                if _DERIV1D[c, a] != 0.0 and (c, b) in index:
                    Dx[index[(c, b)], j] = _DERIV1D[c, a]
                if _DERIV1D[c, b] != 0.0 and (a, c) in index:
                    Dy[index[(a, c)], j] = _DERIV1D[c, b]
        self._dxi = Dx
        self._deta = Dy
        # physical divergence on stacked (b1, b2) coefficients
        self.div_matrix = np.hstack([Dx / self.dx, Dy / self.dy])

        # null space of the divergence operator; the scalar basis is
        # orthonormal so SVD right singular vectors are L2-orthonormal
        U, s, Vt = np.linalg.svd(self.div_matrix)
        rank = int(np.sum(s > 1e-10 * max(s[0], 1.0))) if s.size else 0
        self.divfree_modes = Vt[rank:].T.copy()
        self.magblock_dim = self.divfree_modes.shape[1]
        self.divfree_projector = self.divfree_modes @ self.divfree_modes.T

        expected = {0: 2, 1: 5, 2: 9}[k]
        if self.magblock_dim != expected:
            raise AssertionError(
                f"divergence null space has dim {self.magblock_dim}, expected {expected}"
            )
        # entries of div_matrix scale like 1/h, so compare against s[0]
        resid = np.abs(self.div_matrix @ self.divfree_modes).max()
        scale = s[0] if s.size else 1.0
        if resid > 1e-14 * max(scale, 1.0):
            raise AssertionError(f"divergence-free basis residual {resid:.3e}")

    def eval_modes(self, pts):
        """Vandermonde of scalar modes at reference points: (npts, scalar_dim)."""
        pts = np.asarray(pts, dtype=float)
        V = np.empty(pts.shape[:-1] + (self.scalar_dim,))
        for j, (a, b) in enumerate(self.exponents):
            V[..., j] = _leg1d(a, pts[..., 0]) * _leg1d(b, pts[..., 1])
        return V

    def eval_grad(self, pts):
        """Physical gradients of scalar modes: (npts, scalar_dim, 2)."""
        pts = np.asarray(pts, dtype=float)
        G = np.empty(pts.shape[:-1] + (self.scalar_dim, 2))
        for j, (a, b) in enumerate(self.exponents):
            G[..., j, 0] = _leg1d_deriv(a, pts[..., 0]) * _leg1d(b, pts[..., 1]) / self.dx
            G[..., j, 1] = _leg1d(a, pts[..., 0]) * _leg1d_deriv(b, pts[..., 1]) / self.dy
        return G

    def divergence_coeffs(self, b_stacked):
        """Coefficients of div(B1,B2) for stacked coefficients (..., 2*scalar_dim)."""
        return np.asarray(b_stacked, dtype=float) @ self.div_matrix.T


def build_basis(k, dx, dy):
    return DGBasis(k, dx, dy)


def gauss_rule(Q):
    """Gauss-Legendre nodes/weights on [-1/2, 1/2], weights normalized to 1."""
    x, w = np.polynomial.legendre.leggauss(Q)
    return 0.5 * x, 0.5 * w


_LOBATTO = {
    2: (np.array([-1.0, 1.0]), np.array([1.0, 1.0])),
    3: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, 4.0, 1.0]) / 3.0),
}


def lobatto_rule(L):
    """Gauss-Lobatto nodes/weights on [-1/2, 1/2], weights normalized to 1."""
    if L not in _LOBATTO:
        raise ValueError(f"unsupported Lobatto count {L}")
    x, w = _LOBATTO[L]
    return 0.5 * x, 0.5 * w


class QuadratureSet:
    """Quadrature tables and the PCP point set for one cell geometry.

    Edge order throughout: bottom, right, top, left; points on each edge
    ordered with the running coordinate increasing so that coincident
    points of edge-adjacent cells line up index by index.

    sk_pts layout: [0, Q^2) interior tensor Gauss, then 4 edges x Q, then
    (for L = 3) the interior Lobatto-line points (0, g_q) and (g_q, 0).
    """

    def __init__(self, k, dx, dy):
        if k not in (0, 1, 2):
            raise ValueError(f"unsupported degree k={k}")
        if not (dx > 0.0 and dy > 0.0):
            raise ValueError("cell sizes must be positive")
        self.k = k
        self.dx = float(dx)
        self.dy = float(dy)
        self.Q = k + 1
        self.L = max(2, -(-(k + 3) // 2))

        gx, gw = gauss_rule(self.Q)
        lx, lw = lobatto_rule(self.L)
        self.gauss_x = gx
        self.gauss_w = gw
        self.lobatto_x = lx
        self.lobatto_w = lw
        self.omega_hat1 = float(lw[0])
        assert abs(self.omega_hat1 - 1.0 / (self.L * (self.L - 1))) < 1e-15

        XI, ETA = np.meshgrid(gx, gx, indexing="ij")
        WX, WY = np.meshgrid(gw, gw, indexing="ij")
        self.interior_pts = np.stack([XI.ravel(), ETA.ravel()], axis=-1)
        self.interior_w = (WX * WY).ravel()

        half = 0.5
        self.edge_pts = np.stack([
            np.stack([gx, np.full(self.Q, -half)], axis=-1),
            np.stack([np.full(self.Q, half), gx], axis=-1),
            np.stack([gx, np.full(self.Q, half)], axis=-1),
            np.stack([np.full(self.Q, -half), gx], axis=-1),
        ])
        self.edge_normals = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        self.edge_len = np.array([dx, dy, dx, dy], dtype=float)

        wsum = dx + dy
        self.varpi = np.stack([
            dx * self.omega_hat1 * gw / wsum,
            dy * self.omega_hat1 * gw / wsum,
            dx * self.omega_hat1 * gw / wsum,
            dy * self.omega_hat1 * gw / wsum,
        ])

        # interior Lobatto-line points of the mean decomposition
        mids = lx[1:-1]
        mid_pts = []
        mid_w = []
        for m, wm in zip(mids, lw[1:-1]):
            for q in range(self.Q):
                mid_pts.append((m, gx[q]))          # x on the Lobatto line
                mid_w.append(dy * wm * gw[q] / wsum)
        for m, wm in zip(mids, lw[1:-1]):
            for q in range(self.Q):
                mid_pts.append((gx[q], m))
                mid_w.append(dx * wm * gw[q] / wsum)
        self.midline_pts = np.asarray(mid_pts, dtype=float).reshape(-1, 2)
        self.midline_w = np.asarray(mid_w, dtype=float)

        self.sk_pts = np.concatenate([
            self.interior_pts,
            self.edge_pts.reshape(-1, 2),
            self.midline_pts,
        ])
        self.n_interior = self.Q * self.Q
        self.n_edge = self.Q

        if np.any(self.varpi <= 0.0) or np.any(self.midline_w <= 0.0):
            raise AssertionError("nonpositive decomposition weights")
        self._check_decomposition()

    def decompose_mean(self, edge_vals, mid_vals):
        """Cell mean from edge values (4, Q, ...) and Lobatto-line values."""
        out = np.tensordot(self.varpi, edge_vals, axes=([0, 1], [0, 1]))
        if self.midline_w.size:
            out = out + np.tensordot(self.midline_w, mid_vals, axes=(0, 0))
        return out

    def _check_decomposition(self):
        tol = 1e-14
        for a in range(self.k + 1):
            for b in range(self.k + 1):
                def mono(p):
                    return p[..., 0] ** a * p[..., 1] ** b
                got = self.decompose_mean(mono(self.edge_pts), mono(self.midline_pts))
                exact = _mono_mean(a) * _mono_mean(b)
                if abs(got - exact) > tol:
                    raise AssertionError(
                        f"mean decomposition off for xi^{a} eta^{b}: {got - exact:.3e}"
                    )


def _mono_mean(a):
    # mean of xi^a over [-1/2, 1/2]
    return 0.0 if a % 2 else 0.5 ** a / (a + 1)


def build_quadrature(k, dx, dy):
    return QuadratureSet(k, dx, dy)


def evaluate(coeffs, basis, pts):
    """Evaluate modal coefficients (..., 8, M) at reference points (npts, 2).

    Returns point values of shape (..., npts, 8).
    """
    V = basis.eval_modes(np.asarray(pts, dtype=float).reshape(-1, 2))
    vals = np.asarray(coeffs, dtype=float) @ V.T
    return np.swapaxes(vals, -1, -2)


def project_broken(point_vals, quad, basis):
    """Componentwise L2 projection from interior-Gauss point values.

    point_vals: (..., Q^2, 8) samples at quad.interior_pts. Returns modal
    coefficients (..., 8, M) without the divergence-free constraint.
    """
    V = basis.eval_modes(quad.interior_pts)
    VW = V * quad.interior_w[:, None]
    return np.swapaxes(np.asarray(point_vals, dtype=float), -1, -2) @ VW


def constrain_magblock(coeffs, basis):
    """Project the (B1, B2) coefficient block onto the divergence-free space."""
    from .state import IB1, IB2

    out = np.array(coeffs, dtype=float, copy=True)
    stacked = np.concatenate([out[..., IB1, :], out[..., IB2, :]], axis=-1)
    stacked = stacked @ basis.divfree_projector.T
    sd = basis.scalar_dim
    out[..., IB1, :] = stacked[..., :sd]
    out[..., IB2, :] = stacked[..., sd:]
    return out


def project_field(fn, mesh, basis, quad=None, eos=None, conserved=True):
    """L2-project a field function onto the mesh, shape (Ny, Nx, 8, M).

    fn(x, y) must return (..., 8) values at physical points; primitive
    input (conserved=False) is converted with eos first. The magnetic
    in-plane block is constrained to the divergence-free subspace, which
    is the projection onto the actual solution space rather than the
    componentwise polynomial space.
    """
    from .state import conserved_from_primitive

    if quad is None:
        quad = build_quadrature(basis.k, mesh.dx, mesh.dy)
    x, y = mesh.phys_points(quad.interior_pts)
    vals = np.asarray(fn(x, y), dtype=float)
    if conserved:
        if vals.shape != x.shape + (8,):
            raise ValueError("field function returned wrong shape")
        U = vals
    else:
        U = conserved_from_primitive(vals, eos)
    return constrain_magblock(project_broken(U, quad, basis), basis)
