"""Time integrator: stage algebra, limiting hooks, run driver behavior."""

from types import SimpleNamespace

import numpy as np
import pytest

import rmhd_dg.state as st
from rmhd_dg.dg_operator import BoundarySpec, FieldState
from rmhd_dg.eos import EosSpec
from rmhd_dg.grid import CartesianMesh, build_basis, build_quadrature
from rmhd_dg.time_integrator import (ALPHA, LimiterConfig, RunResult,
                                     admissibility_violations, initialize,
                                     run, ssp_rk3_step, total_rest_mass)


def make_problem(initial, nx=8, ny=8, k=2, domain=(0.0, 1.0, 0.0, 1.0),
                 gamma=5.0 / 3.0, bc=None):
    mesh = CartesianMesh(domain, nx, ny)
    return SimpleNamespace(
        mesh=mesh,
        basis=build_basis(k, mesh.dx, mesh.dy),
        quad=build_quadrature(k, mesh.dx, mesh.dy),
        eos=EosSpec(gamma),
        bc=BoundarySpec.periodic() if bc is None else bc,
        initial=initial,
    )


def constant_prim(x, y):
    out = np.empty(x.shape + (8,))
    out[..., st.IRHO] = 1.0
    out[..., st.IV1] = 0.3
    out[..., st.IV2] = 0.2
    out[..., st.IV3] = 0.1
    out[..., st.IB1] = 0.8
    out[..., st.IB2] = 0.4
    out[..., st.IB3] = 0.2
    out[..., st.IP] = 1.0
    return out


def smooth_prim(x, y):
    out = np.empty(x.shape + (8,))
    out[..., st.IRHO] = 1.0 + 0.3 * np.sin(2.0 * np.pi * (x + y))
    out[..., st.IV1] = 0.5
    out[..., st.IV2] = 0.3
    out[..., st.IV3] = 0.0
    out[..., st.IB1] = 1.0
    out[..., st.IB2] = 0.7
    out[..., st.IB3] = 0.5
    out[..., st.IP] = 1.0
    return out


def trough_prim(x, y):
    """Near-vacuum flat troughs; projection undershoots them."""
    s4 = np.sin(2.0 * np.pi * (x + y)) ** 4
    out = np.empty(x.shape + (8,))
    out[..., st.IRHO] = 2.0e-4 + s4
    out[..., st.IV1] = 0.6 * np.sin(2.0 * np.pi * x)
    out[..., st.IV2] = 0.3
    out[..., st.IV3] = 0.0
    out[..., st.IB1] = 0.4
    out[..., st.IB2] = 0.4
    out[..., st.IB3] = 0.2
    out[..., st.IP] = 2.0e-4 + 0.5 * s4
    return out


class TestStageAlgebra:
    def test_alpha_rows_are_convex(self):
        for row in ALPHA:
            assert abs(sum(row) - 1.0) <= 1e-15
            assert all(w > 0 for w in row)

    def test_linear_surrogate_amplification(self):
        prob = make_problem(constant_prim, nx=4, ny=3)
        rng = np.random.default_rng(7)
        c0 = rng.normal(size=(3, 4, 8, prob.basis.scalar_dim))
        state = FieldState(c0, prob.mesh, prob.basis, prob.quad, t=0.0)
        seen = []

        def rhs(u, ts, warm):
            seen.append((ts, warm))
            return u

        out = ssp_rk3_step(state, 0.1, prob.bc, prob.eos,
                           limiter=LimiterConfig.off(), rhs_fn=rhs)
        # exp(dt) truncated at third order
        factor = 1.1051666666666666
        assert np.allclose(out.coeffs, factor * c0, rtol=1e-14, atol=0.0)
        assert out.t == 0.1
        assert [ts for ts, _ in seen] == [0.0, 0.1, 0.05]
        assert [w for _, w in seen] == [False, True, True]

    def test_stage_errors_carry_stage_index(self):
        prob = make_problem(constant_prim, nx=3, ny=3)
        coeffs = np.zeros((3, 3, 8, prob.basis.scalar_dim))
        coeffs[..., st.ID, 0] = 1.0
        coeffs[..., st.IE, 0] = 0.9  # q = E - D < 0: inadmissible mean
        state = FieldState(coeffs, prob.mesh, prob.basis, prob.quad)
        with pytest.raises(st.InadmissibleStateError, match="stage 1"):
            ssp_rk3_step(state, 1e-3, prob.bc, prob.eos,
                         limiter=LimiterConfig(),
                         rhs_fn=lambda u, ts, warm: np.zeros_like(u))


class TestStepDeterminism:
    def test_restart_from_shared_work_dict_is_bitwise(self):
        prob = make_problem(smooth_prim, nx=6, ny=6)
        state0 = initialize(prob, LimiterConfig())
        dt = 0.15 / (1.0 / prob.mesh.dx + 1.0 / prob.mesh.dy)
        work = {}
        s1 = ssp_rk3_step(state0, dt, prob.bc, prob.eos,
                          limiter=LimiterConfig(), work=work)
        cont = ssp_rk3_step(s1, dt, prob.bc, prob.eos,
                            limiter=LimiterConfig(), work=work)
        cold = ssp_rk3_step(s1, dt, prob.bc, prob.eos,
                            limiter=LimiterConfig(), work={})
        assert np.array_equal(cont.coeffs, cold.coeffs)


class TestInitialize:
    def test_projection_is_limited_admissible(self):
        prob = make_problem(trough_prim, nx=10, ny=10)
        state = initialize(prob, LimiterConfig())
        eps = 1e-13 * np.maximum(1.0, state.coeffs[..., st.IE, 0])
        assert admissibility_violations(state.coeffs, prob.basis,
                                        prob.quad, eps) == 0

    def test_unlimited_trough_projection_has_violations(self):
        prob = make_problem(trough_prim, nx=10, ny=10)
        state = initialize(prob, LimiterConfig.off())
        eps = 1e-13 * np.maximum(1.0, state.coeffs[..., st.IE, 0])
        assert admissibility_violations(state.coeffs, prob.basis,
                                        prob.quad, eps) > 0


class TestRunDriver:
    def test_constant_state_is_steady(self):
        prob = make_problem(constant_prim)
        result = run(prob, t_end=0.05, cfl=0.15,
                     limiter=LimiterConfig(tvb_m=1.0))
        assert result.breakdown is None
        assert result.steps >= 1
        assert result.state.t == 0.05
        init = initialize(prob, LimiterConfig(tvb_m=1.0))
        scale = np.abs(init.coeffs).max()
        assert np.abs(result.state.coeffs - init.coeffs).max() <= 1e-12 * scale
        assert result.tvb_cells == 0
        assert result.pcp_cells == 0
        drift = abs(result.mass_final - result.mass_initial)
        assert drift <= 1e-13 * abs(result.mass_initial)

    def test_log_line_format(self):
        prob = make_problem(constant_prim, nx=4, ny=4)
        result = run(prob, t_end=0.02, limiter=LimiterConfig())
        assert result.log_lines[0].startswith("# step time dt mass")
        body = [ln for ln in result.log_lines if not ln.startswith("#")]
        assert len(body) == result.steps
        parts = body[-1].split()
        assert len(parts) == 7
        assert int(parts[0]) == result.steps
        assert float(parts[1]) == result.state.t
        assert float(parts[3]) == result.mass_final
        int(parts[4]), int(parts[5]), float(parts[6])

    def test_smooth_run_conserves_mass(self):
        prob = make_problem(smooth_prim)
        result = run(prob, t_end=0.05, limiter=LimiterConfig())
        assert result.breakdown is None
        assert np.isfinite(result.state.coeffs).all()
        drift = abs(result.mass_final - result.mass_initial)
        assert drift <= 1e-12 * abs(result.mass_initial)
        assert result.state.t == 0.05

    def test_snapshot_times_hit_exactly(self):
        prob = make_problem(smooth_prim, nx=6, ny=6)
        seen = []
        result = run(prob, t_end=0.05, limiter=LimiterConfig(),
                     snapshot_times=(0.0, 0.02, 0.05),
                     on_snapshot=lambda s: seen.append(s.t))
        assert seen == [0.0, 0.02, 0.05]
        assert result.state.t == 0.05
        assert result.breakdown is None

    def test_snapshot_time_outside_range_rejected(self):
        prob = make_problem(smooth_prim, nx=4, ny=4)
        with pytest.raises(ValueError, match="snapshot times"):
            run(prob, t_end=0.01, snapshot_times=(0.5,))

    def test_audit_mode_clean_on_smooth_run(self):
        prob = make_problem(smooth_prim, nx=6, ny=6)
        result = run(prob, t_end=0.02, limiter=LimiterConfig(), audit=True)
        assert result.breakdown is None
        assert result.audit_violations == 0

    def test_breakdown_recorded_without_limiting(self):
        prob = make_problem(trough_prim, nx=10, ny=10)
        result = run(prob, t_end=0.1, limiter=LimiterConfig.off())
        assert isinstance(result, RunResult)
        assert result.breakdown is not None
        assert result.breakdown["step"] == 1
        assert "stage 1" in result.breakdown["reason"]
        assert result.log_lines[-1].startswith("# breakdown")

    def test_same_start_survives_with_limiting(self):
        prob = make_problem(trough_prim, nx=10, ny=10)
        result = run(prob, t_end=2e-3, limiter=LimiterConfig())
        assert result.breakdown is None
        assert result.steps >= 1
        assert result.pcp_cells > 0

    def test_log_written_to_path(self, tmp_path):
        prob = make_problem(constant_prim, nx=4, ny=4)
        path = tmp_path / "run.log"
        result = run(prob, t_end=0.01, limiter=LimiterConfig(),
                     log=str(path))
        lines = path.read_text().strip().split("\n")
        assert lines == result.log_lines

    def test_total_rest_mass_matches_quadrature(self):
        prob = make_problem(smooth_prim, nx=5, ny=5)
        state = initialize(prob, LimiterConfig.off())
        mass = total_rest_mass(state)
        # mode 0 is the cell mean, so the sum times the area is the integral
        ref = prob.mesh.cell_area * state.coeffs[..., st.ID, 0].sum()
        assert mass == ref
        assert mass > 0
