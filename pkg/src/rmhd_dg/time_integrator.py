"""SSP Runge-Kutta time stepping with per-stage limiting.

Each step is the three-stage third-order strong-stability-preserving
scheme: every stage forms a convex combination of forward-Euler updates
and is immediately re-limited (TVB slope limiter first, then the
admissibility limiter), so the property that cell means stay admissible
under the CFL bound carries from the Euler building block to the full
step. The run driver projects the initial condition, limits it the same
way, recomputes dt from the fixed CFL formula every step, clips steps to
land exactly on snapshot times and the final time, and logs one line per
step. Breakdowns (NaN or inadmissible cell means, expected only with the
admissibility limiter disabled) are detected and recorded, not raised:
reproducing them is part of the point.
"""

from dataclasses import dataclass, field

import numpy as np

from . import state as st
from .dg_operator import FieldState, compute_dt, residual_field
from .grid import evaluate, project_field
from .pcp_limiter import limit_field_array, oscillation_limit_array

# convex-combination weights of the three stages; each stage's Euler
# piece enters with beta = 1
ALPHA = ((1.0,), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))

_RECOVERABLE = (st.InadmissibleStateError, st.RecoveryConvergenceError)


@dataclass
class LimiterConfig:
    """Per-stage limiting switches.

    eps = None derives the admissibility margin per cell and per
    invocation as 1e-13 * max(1, mean energy); a float fixes it globally.
    tvb_m <= 0 disables the slope limiter.
    """

    pcp: bool = True
    eps: float | None = None
    tvb_m: float = 0.0

    @classmethod
    def off(cls):
        return cls(pcp=False, tvb_m=0.0)


def _cell_eps(coeffs, limiter):
    if limiter.eps is not None:
        return limiter.eps
    return 1e-13 * np.maximum(1.0, coeffs[..., st.IE, 0])


def ssp_rk3_step(state, dt, bc, eos, limiter=None, a=1.0, work=None,
                 stats=None, rhs_fn=None, audit_cb=None):
    """One SSP-RK3 step from state.t to state.t + dt; returns a new state.

    work: reusable buffer dict threaded through the stage residuals (the
    first stage always re-seeds the recovery, so stepping with a shared
    dict is bitwise identical to stepping with fresh ones). stats, if
    given, receives tvb_cells, pcp_cells (summed over stages) and
    sigma_max for this step. rhs_fn replaces the DG residual with
    rhs_fn(coeffs, t, warm) -> dcdt; it exists so the bare integrator can
    be checked against hand-expanded surrogates. audit_cb, if given, is
    called with each limited stage output (including the final one).
    """
    if limiter is None:
        limiter = LimiterConfig()
    mesh, basis, quad = state.mesh, state.basis, state.quad
    ny, nx = mesh.ny, mesh.nx
    if stats is not None:
        stats["tvb_cells"] = 0
        stats["pcp_cells"] = 0
        stats["sigma_max"] = 0.0
    flags = np.zeros((ny, nx), dtype=np.int8)

    def rhs(u, ts, warm, idx):
        if rhs_fn is not None:
            return rhs_fn(u, ts, warm)
        try:
            r, sig = residual_field(u, mesh, basis, quad, bc, eos, ts, a=a,
                                    return_sigma=True, work=work, warm=warm)
        except _RECOVERABLE as exc:
            raise type(exc)(f"stage {idx}: {exc}") from exc
        if stats is not None:
            smax = float(sig.max())
            if smax > stats["sigma_max"]:
                stats["sigma_max"] = smax
        return r

    def pi_h(u, ts, idx):
        try:
            if limiter.tvb_m > 0.0:
                u = oscillation_limit_array(u, mesh, basis, quad,
                                            limiter.tvb_m, bc=bc, t=ts,
                                            flags=flags)
                if stats is not None:
                    stats["tvb_cells"] += int(flags.sum())
            if limiter.pcp:
                u = limit_field_array(u, basis, quad, _cell_eps(u, limiter),
                                      flags=flags)
                if stats is not None:
                    stats["pcp_cells"] += int(flags.sum())
        except _RECOVERABLE as exc:
            raise type(exc)(f"stage {idx}: {exc}") from exc
        return u

    c = state.coeffs
    t = state.t
    u1 = pi_h(c + dt * rhs(c, t, False, 1), t + dt, 1)
    if audit_cb is not None:
        audit_cb(u1)
    u2 = pi_h(0.75 * c + 0.25 * (u1 + dt * rhs(u1, t + dt, True, 2)),
              t + 0.5 * dt, 2)
    if audit_cb is not None:
        audit_cb(u2)
    u3 = pi_h(c / 3.0 + (2.0 / 3.0) * (u2 + dt * rhs(u2, t + 0.5 * dt, True, 3)),
              t + dt, 3)
    if audit_cb is not None:
        audit_cb(u3)
    return FieldState(u3, mesh, basis, quad, t=t + dt)


def total_rest_mass(state):
    """Integral of D over the domain (exactly conserved under periodic BC)."""
    return state.mesh.cell_area * float(np.sum(state.coeffs[..., st.ID, 0]))


def admissibility_violations(coeffs, basis, quad, eps):
    """Count admissibility failures over all cell means and S_K points.

    eps: scalar or (ny, nx) per-cell margin. A point fails when D < eps,
    q < eps, or Psi of the eps-shifted state is negative.
    """
    vals = evaluate(coeffs, basis, quad.sk_pts)
    allv = np.concatenate([vals, coeffs[..., None, :, 0]], axis=2)
    eps3 = np.asarray(eps, dtype=float)
    if eps3.ndim:
        eps3 = eps3[:, :, None]
    D = allv[..., st.ID]
    E = allv[..., st.IE]
    m = allv[..., st.IM1:st.IM3 + 1]
    q = E - np.sqrt(D * D + np.sum(m * m, axis=-1))
    psi = st.psi_value(D, allv[..., st.IM1], allv[..., st.IM2],
                       allv[..., st.IM3], allv[..., st.IB1],
                       allv[..., st.IB2], allv[..., st.IB3], E - eps3)
    return int(np.sum((D < eps3) | (q < eps3) | (psi < 0.0)))


@dataclass
class RunResult:
    state: object
    steps: int
    mass_initial: float
    mass_final: float
    sigma_max: float = 0.0
    tvb_cells: int = 0
    pcp_cells: int = 0
    breakdown: dict | None = None
    audit_violations: int = 0
    log_lines: list = field(default_factory=list)


def initialize(problem, limiter=None):
    """Project the initial primitives and limit the result into G_h^k."""
    if limiter is None:
        limiter = LimiterConfig()
    coeffs = project_field(problem.initial, problem.mesh, problem.basis,
                           eos=problem.eos, conserved=False)
    if limiter.tvb_m > 0.0:
        coeffs = oscillation_limit_array(coeffs, problem.mesh, problem.basis,
                                         problem.quad, limiter.tvb_m,
                                         bc=problem.bc, t=0.0)
    if limiter.pcp:
        coeffs = limit_field_array(coeffs, problem.basis, problem.quad,
                                   _cell_eps(coeffs, limiter))
    return FieldState(coeffs, problem.mesh, problem.basis, problem.quad, t=0.0)


def _means_broken(coeffs):
    if not np.isfinite(coeffs).all():
        return "non-finite coefficients"
    rep = st.g1_report(coeffs[..., 0])
    if not rep.admissible.all():
        bad = int(np.sum(~rep.admissible))
        return f"{bad} inadmissible cell mean(s)"
    return None


def run(problem, t_end, cfl=0.15, limiter=None, a=1.0, snapshot_times=(),
        on_snapshot=None, log=None, audit=False, max_steps=10_000_000,
        initial_state=None):
    """Advance a problem to t_end; returns a RunResult.

    problem provides mesh, basis, quad, bc, eos, and initial (a primitive
    field callable). initial_state restarts from an existing FieldState
    (skipping projection and initial limiting). snapshot_times are hit
    exactly, as is t_end; when a scheduled time already coincides with a
    natural step boundary up to rounding, the step size is left untouched
    and only the time label is snapped, so scheduling a snapshot on a step
    the run would take anyway does not perturb the trajectory.
    on_snapshot(state) fires at each time (including the start and t_end
    if listed). log accepts a path or file object and receives one line
    per step: step time dt mass tvb_cells pcp_cells sigma_max. audit=True
    checks every cell mean and S_K point of the initial state and of each
    stage output against the strict admissibility predicate (slow).
    Breakdowns are recorded in the result, not raised.
    """
    if limiter is None:
        limiter = LimiterConfig()
    if initial_state is not None:
        state = initial_state
    else:
        state = initialize(problem, limiter)
    bc, eos = problem.bc, problem.eos

    close_log = False
    if isinstance(log, str):
        log = open(log, "w")
        close_log = True

    tol = 1e-12 * max(1.0, abs(t_end))
    events = sorted({float(s) for s in snapshot_times})
    if any(s < state.t - tol or s > t_end for s in events):
        raise ValueError("snapshot times must lie in [start, t_end]")
    if events and events[0] <= state.t + tol:
        if on_snapshot is not None:
            on_snapshot(state)
        events = events[1:]

    result = RunResult(state=state, steps=0,
                       mass_initial=total_rest_mass(state),
                       mass_final=total_rest_mass(state))
    work = {}
    stats = {}

    audit_cb = None
    if audit:
        def audit_cb(u):
            result.audit_violations += admissibility_violations(
                u, state.basis, state.quad, 0.0)
        audit_cb(state.coeffs)

    def emit(line):
        result.log_lines.append(line)
        if log is not None:
            log.write(line + "\n")

    emit("# step time dt mass tvb_cells pcp_cells sigma_max")
    try:
        while t_end - state.t > tol:
            if result.steps >= max_steps:
                raise RuntimeError(f"exceeded max_steps={max_steps}")
            dt = compute_dt(state, cfl, eos, a=a)
            target = None
            nxt = events[0] if events else t_end
            gap = nxt - state.t
            if gap <= dt * (1.0 + 1e-9):
                target = nxt
                # a scheduled time already on the step grid only relabels t
                if abs(gap - dt) > 4.0 * np.spacing(dt):
                    dt = gap
            try:
                new_state = ssp_rk3_step(state, dt, bc, eos, limiter=limiter,
                                         a=a, work=work, stats=stats,
                                         audit_cb=audit_cb)
            except _RECOVERABLE as exc:
                result.breakdown = {"step": result.steps + 1,
                                    "time": state.t, "reason": str(exc)}
                emit(f"# breakdown at step {result.steps + 1} "
                     f"t={state.t:.12e}: {exc}")
                break
            if target is not None:
                new_state.t = target
            reason = None if limiter.pcp else _means_broken(new_state.coeffs)
            if reason is not None:
                result.breakdown = {"step": result.steps + 1,
                                    "time": new_state.t, "reason": reason}
                emit(f"# breakdown at step {result.steps + 1} "
                     f"t={new_state.t:.12e}: {reason}")
                break
            state = new_state
            result.steps += 1
            result.state = state
            result.mass_final = total_rest_mass(state)
            result.sigma_max = max(result.sigma_max, stats["sigma_max"])
            result.tvb_cells += stats["tvb_cells"]
            result.pcp_cells += stats["pcp_cells"]
            emit(f"{result.steps} {state.t:.12e} {dt:.12e} "
                 f"{result.mass_final:.17e} {stats['tvb_cells']} "
                 f"{stats['pcp_cells']} {stats['sigma_max']:.6e}")
            if events and target is not None and target == events[0]:
                events.pop(0)
                if on_snapshot is not None:
                    on_snapshot(state)
    finally:
        if close_log:
            log.close()
    return result
