import numpy as np
import pytest

from rmhd_dg.grid import (
    CartesianMesh,
    build_basis,
    build_quadrature,
    constrain_magblock,
    evaluate,
    project_broken,
    project_field,
)
from rmhd_dg.state import IB1, IB2, IB3, ID, IE, IP, IRHO
from rmhd_dg.eos import EosSpec

EOS53 = EosSpec(gamma=5.0 / 3.0)


class TestMesh:
    def test_sizes(self):
        mesh = CartesianMesh((0.0, 2.0, -1.0, 1.0), 10, 4)
        assert mesh.dx == pytest.approx(0.2)
        assert mesh.dy == pytest.approx(0.5)
        assert mesh.xc[0] == pytest.approx(0.1)
        assert mesh.yc[-1] == pytest.approx(0.75)
        assert mesh.cell_area == pytest.approx(0.1)

    def test_phys_points(self):
        mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), 2, 3)
        pts = np.array([[-0.5, -0.5], [0.5, 0.5], [0.0, 0.0]])
        x, y = mesh.phys_points(pts)
        assert x.shape == (3, 2, 3)
        assert x[0, 0, 0] == pytest.approx(0.0)  # lower-left corner of cell (0,0)
        assert y[2, 1, 1] == pytest.approx(1.0)
        assert x[1, 1, 2] == pytest.approx(0.75)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            CartesianMesh((0.0, 0.0, 0.0, 1.0), 4, 4)


class TestBasis:
    @pytest.mark.parametrize("k,sd,md", [(0, 1, 2), (1, 3, 5), (2, 6, 9)])
    def test_dimensions(self, k, sd, md):
        basis = build_basis(k, 0.1, 0.1)
        assert basis.scalar_dim == sd
        assert basis.magblock_dim == md

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            build_basis(3, 0.1, 0.1)

    @pytest.mark.parametrize("dx,dy", [(0.1, 0.1), (0.3, 0.07)])
    def test_divfree_modes_annihilated(self, dx, dy):
        basis = build_basis(2, dx, dy)
        resid = basis.div_matrix @ basis.divfree_modes
        assert np.abs(resid).max() < 1e-13

    def test_divfree_modes_orthonormal(self):
        basis = build_basis(2, 0.25, 0.5)
        G = basis.divfree_modes.T @ basis.divfree_modes
        assert np.abs(G - np.eye(9)).max() < 1e-13

    def test_projector_idempotent(self):
        basis = build_basis(2, 0.2, 0.4)
        P = basis.divfree_projector
        assert np.abs(P @ P - P).max() < 1e-13
        assert np.abs(P - P.T).max() < 1e-15

    def test_mass_matrix_diagonal(self):
        # interior tensor Gauss (Q=3) integrates mode products exactly
        basis = build_basis(2, 0.1, 0.2)
        quad = build_quadrature(2, 0.1, 0.2)
        V = basis.eval_modes(quad.interior_pts)
        M = V.T @ (quad.interior_w[:, None] * V)
        assert np.abs(M - np.eye(6)).max() < 1e-14

    def test_gradient_against_finite_differences(self):
        basis = build_basis(2, 0.3, 0.11)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.45, 0.45, size=(50, 2))
        G = basis.eval_grad(pts)
        h = 1e-6
        for axis, d in [(0, basis.dx), (1, basis.dy)]:
            dp = pts.copy()
            dp[:, axis] += h
            dm = pts.copy()
            dm[:, axis] -= h
            fd = (basis.eval_modes(dp) - basis.eval_modes(dm)) / (2 * h * d)
            assert np.abs(G[..., axis] - fd).max() < 1e-7

    def test_divergence_coeffs_match_grad_eval(self):
        basis = build_basis(2, 0.2, 0.5)
        rng = np.random.default_rng(4)
        stacked = rng.normal(size=12)
        dcoef = basis.divergence_coeffs(stacked)
        pts = rng.uniform(-0.5, 0.5, size=(20, 2))
        V = basis.eval_modes(pts)
        G = basis.eval_grad(pts)
        direct = G[..., 0] @ stacked[:6] + G[..., 1] @ stacked[6:]
        assert np.abs(V @ dcoef - direct).max() < 1e-12


class TestQuadrature:
    def test_lobatto_weights_k2(self):
        quad = build_quadrature(2, 0.1, 0.1)
        assert quad.L == 3
        assert np.allclose(quad.lobatto_w, [1 / 6, 2 / 3, 1 / 6])
        assert quad.omega_hat1 == pytest.approx(1 / 6, abs=0)

    @pytest.mark.parametrize("k", [0, 1])
    def test_lobatto_weights_low_order(self, k):
        quad = build_quadrature(k, 0.1, 0.1)
        assert quad.L == 2
        assert quad.omega_hat1 == pytest.approx(0.5, abs=0)

    def test_varpi_square_cell(self):
        quad = build_quadrature(2, 0.25, 0.25)
        assert np.allclose(quad.varpi, quad.gauss_w[None, :] / 12.0)
        assert quad.varpi.sum() == pytest.approx(1.0 / 3.0, rel=1e-15)

    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("dx,dy", [(0.1, 0.1), (0.05, 0.3)])
    def test_decomposition_weights_sum_to_one(self, k, dx, dy):
        quad = build_quadrature(k, dx, dy)
        total = quad.varpi.sum() + quad.midline_w.sum()
        assert total == pytest.approx(1.0, rel=1e-14)
        assert np.all(quad.varpi > 0.0)

    def test_point_counts_k2(self):
        quad = build_quadrature(2, 0.1, 0.1)
        assert quad.interior_pts.shape == (9, 2)
        assert quad.edge_pts.shape == (4, 3, 2)
        assert quad.midline_pts.shape == (6, 2)
        assert quad.sk_pts.shape == (27, 2)

    def test_point_counts_k1(self):
        quad = build_quadrature(1, 0.1, 0.1)
        assert quad.sk_pts.shape == (12, 2)
        assert quad.midline_pts.shape == (0, 2)

    def test_edge_points_align_between_neighbors(self):
        quad = build_quadrature(2, 0.1, 0.1)
        # top edge of one cell and bottom edge of the one above share x order
        assert np.allclose(quad.edge_pts[2][:, 0], quad.edge_pts[0][:, 0])
        assert np.allclose(quad.edge_pts[1][:, 1], quad.edge_pts[3][:, 1])

    def test_decomposition_exact_for_random_p2(self):
        rng = np.random.default_rng(9)
        quad = build_quadrature(2, 0.2, 0.07)
        coeffs = rng.normal(size=(3, 3))

        def poly(p):
            out = 0.0
            for a in range(3):
                for b in range(3):
                    out = out + coeffs[a, b] * p[..., 0] ** a * p[..., 1] ** b
            return out

        got = quad.decompose_mean(poly(quad.edge_pts), poly(quad.midline_pts))
        exact = sum(
            coeffs[a, b] * _mono_mean(a) * _mono_mean(b)
            for a in range(3)
            for b in range(3)
        )
        assert got == pytest.approx(exact, abs=1e-14)

    def test_decomposition_matches_mean_coefficient(self):
        # the identity the weak-positivity argument rests on: the cell mean
        # of any element polynomial equals the weighted S_K combination
        rng = np.random.default_rng(11)
        basis = build_basis(2, 0.3, 0.12)
        quad = build_quadrature(2, 0.3, 0.12)
        coeffs = rng.normal(size=(4, 5, 8, 6))
        coeffs = constrain_magblock(coeffs, basis)
        edge_vals = evaluate(coeffs, basis, quad.edge_pts.reshape(-1, 2))
        mid_vals = evaluate(coeffs, basis, quad.midline_pts)
        got = quad.decompose_mean(
            np.moveaxis(edge_vals.reshape(4, 5, 4, 3, 8), (2, 3), (0, 1)),
            np.moveaxis(mid_vals, 2, 0),
        )
        assert np.abs(got - coeffs[..., 0]).max() < 1e-13


def _mono_mean(a):
    return 0.0 if a % 2 else 0.5 ** a / (a + 1)


class TestProjection:
    def test_constant_field(self):
        mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), 3, 2)
        basis = build_basis(2, mesh.dx, mesh.dy)
        const = np.array([1.0, 0.1, 0.0, 0.0, 0.5, 0.2, 0.0, 2.5])

        def fn(x, y):
            return np.broadcast_to(const, x.shape + (8,))

        coeffs = project_field(fn, mesh, basis)
        assert np.allclose(coeffs[..., 0], const, atol=1e-15)
        assert np.abs(coeffs[..., 1:]).max() < 1e-14
        vals = evaluate(coeffs, basis, np.array([[0.13, -0.41]]))
        assert np.allclose(vals[..., 0, :], const, atol=1e-14)

    def test_projection_idempotent_on_element_polys(self):
        rng = np.random.default_rng(21)
        basis = build_basis(2, 0.5, 0.25)
        quad = build_quadrature(2, 0.5, 0.25)
        coeffs = constrain_magblock(rng.normal(size=(2, 2, 8, 6)), basis)
        vals = evaluate(coeffs, basis, quad.interior_pts)
        back = constrain_magblock(project_broken(vals, quad, basis), basis)
        assert np.abs(back - coeffs).max() < 1e-13

    def test_orszag_tang_b_field_divergence(self):
        mesh = CartesianMesh((0.0, 2 * np.pi, 0.0, 2 * np.pi), 5, 4)
        basis = build_basis(2, mesh.dx, mesh.dy)

        def fn(x, y):
            out = np.zeros(x.shape + (8,))
            out[..., IRHO] = 1.0
            out[..., IP] = 1.0
            out[..., IB1] = -np.sin(y)
            out[..., IB2] = np.sin(2 * x)
            return out

        coeffs = project_field(fn, mesh, basis, eos=EOS53, conserved=False)
        stacked = np.concatenate([coeffs[..., IB1, :], coeffs[..., IB2, :]], axis=-1)
        dcoef = basis.divergence_coeffs(stacked)
        assert np.abs(dcoef).max() < 1e-12
        # pointwise divergence of the projected polynomial
        rng = np.random.default_rng(2)
        pts = rng.uniform(-0.5, 0.5, size=(40, 2))
        V = basis.eval_modes(pts)
        assert np.abs(dcoef @ V.T).max() < 1e-12

    def test_primitive_projection_matches_conserved(self):
        mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), 2, 2)
        basis = build_basis(1, mesh.dx, mesh.dy)
        prim = np.array([2.0, 0.3, -0.1, 0.0, 0.4, 0.0, 0.1, 1.5])

        def fp(x, y):
            return np.broadcast_to(prim, x.shape + (8,))

        from rmhd_dg.state import conserved_from_primitive

        coeffs = project_field(fp, mesh, basis, eos=EOS53, conserved=False)
        assert np.allclose(coeffs[..., 0], conserved_from_primitive(prim, EOS53), rtol=1e-14)

    def test_smooth_field_convergence(self):
        # projection error of a smooth non-polynomial field drops ~h^3 for k=2
        errs = []
        for n in (4, 8):
            mesh = CartesianMesh((0.0, 1.0, 0.0, 1.0), n, n)
            basis = build_basis(2, mesh.dx, mesh.dy)
            quad = build_quadrature(2, mesh.dx, mesh.dy)

            def fn(x, y):
                out = np.zeros(x.shape + (8,))
                out[..., ID] = 2.0 + np.sin(2 * np.pi * (x + y))
                out[..., IE] = 5.0
                return out

            coeffs = project_field(fn, mesh, basis, quad)
            rng = np.random.default_rng(5)
            pts = rng.uniform(-0.5, 0.5, size=(30, 2))
            x, y = mesh.phys_points(pts)
            vals = evaluate(coeffs, basis, pts)
            errs.append(np.abs(vals[..., ID] - (2.0 + np.sin(2 * np.pi * (x + y)))).max())
        assert errs[1] < errs[0] / 6.0
