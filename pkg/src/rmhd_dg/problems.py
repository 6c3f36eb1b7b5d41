"""Standard test scenarios: initial data, boundaries, and defaults.

Five setups: two smooth periodic waves with closed-form solutions (for
convergence studies), the Orszag-Tang vortex, a family of magnetized
cylindrical blasts, and a Mach-50 relativistic jet computed on a half
domain with a reflecting symmetry wall. Every constructor runs a dense
pointwise admissibility pre-flight on its initial data, so a spec that
constructs is safe to project.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import state as st
from .dg_operator import BoundarySpec, mirror_coeffs
from .eos import EosSpec
from .grid import CartesianMesh, build_basis, build_quadrature

# beam parameters of the jet; the beam pressure follows from the Mach
# number through the relativistic sound speed and is shared by the
# ambient medium (pressure-matched injection)
JET_BEAM_SPEED = 0.99
JET_BEAM_MACH = 50.0
JET_BEAM_RHO = 0.1
JET_NOZZLE_HALFWIDTH = 0.5
JET_WALL_YMAX = 25.0


def jet_pressure(gamma=5.0 / 3.0):
    """Beam/ambient pressure from c_s = v_b / M_b and c_s^2 = G p / (rho h)."""
    cs2 = (JET_BEAM_SPEED / JET_BEAM_MACH) ** 2
    return cs2 * JET_BEAM_RHO / (gamma * (1.0 - cs2 / (gamma - 1.0)))


def jet_strong_field(gamma=5.0 / 3.0):
    """Field strength giving plasma beta 2p/B^2 = 1e-3."""
    return np.sqrt(2000.0 * jet_pressure(gamma))


@dataclass
class ProblemSpec:
    name: str
    domain: tuple
    gamma: float
    initial: Callable
    bc: BoundarySpec
    t_end: float
    exact: Optional[Callable] = None
    tvb_m: float = 1.0


def _prim(shape):
    return np.empty(shape + (8,))


def _smooth_sine_exact(x, y, t):
    out = _prim(np.shape(x))
    out[..., st.IRHO] = 1.0 + 0.9999999 * np.sin(2.0 * np.pi * (x + y - 1.1 * t))
    out[..., st.IV1] = 0.9
    out[..., st.IV2] = 0.2
    out[..., st.IV3] = 0.0
    out[..., st.IB1] = 1.0
    out[..., st.IB2] = 1.0
    out[..., st.IB3] = 1.0
    out[..., st.IP] = 1e-2
    return out


# kappa = sqrt(1 + rho H W^2) for rho=1, p=0.1, gamma=5/3, |v|=0.9:
# H = 1.25, W^2 = 1/0.19
ALFVEN_KAPPA = np.sqrt(1.0 + 1.25 / 0.19)


def _alfven_exact(x, y, t):
    alpha = np.pi / 4.0
    ca, sa = np.cos(alpha), np.sin(alpha)
    phase = 2.0 * np.pi * (x * ca + y * sa + t / ALFVEN_KAPPA)
    sn, cs = np.sin(phase), np.cos(phase)
    out = _prim(np.shape(x))
    out[..., st.IRHO] = 1.0
    out[..., st.IV1] = -0.9 * sn * sa
    out[..., st.IV2] = 0.9 * sn * ca
    out[..., st.IV3] = 0.9 * cs
    out[..., st.IB1] = ca + ALFVEN_KAPPA * out[..., st.IV1]
    out[..., st.IB2] = sa + ALFVEN_KAPPA * out[..., st.IV2]
    out[..., st.IB3] = ALFVEN_KAPPA * out[..., st.IV3]
    out[..., st.IP] = 0.1
    return out


def _orszag_tang_initial(x, y):
    A = 0.99 / np.sqrt(2.0)
    out = _prim(np.shape(x))
    out[..., st.IRHO] = 1.0
    out[..., st.IV1] = -A * np.sin(y)
    out[..., st.IV2] = A * np.sin(x)
    out[..., st.IV3] = 0.0
    out[..., st.IB1] = -np.sin(y)
    out[..., st.IB2] = np.sin(2.0 * x)
    out[..., st.IB3] = 0.0
    out[..., st.IP] = 10.0
    return out


def _blast_initial(b_ambient):
    def fn(x, y):
        r = np.sqrt(x * x + y * y)
        out = _prim(np.shape(x))
        # linear-in-r taper of the raw values between r=0.8 and r=1
        out[..., st.IRHO] = np.interp(r, (0.8, 1.0), (1e-2, 1e-4))
        out[..., st.IP] = np.interp(r, (0.8, 1.0), (1.0, 5e-4))
        out[..., st.IV1] = 0.0
        out[..., st.IV2] = 0.0
        out[..., st.IV3] = 0.0
        out[..., st.IB1] = b_ambient
        out[..., st.IB2] = 0.0
        out[..., st.IB3] = 0.0
        return out

    return fn


def _jet_initial(b_ambient, pressure):
    def fn(x, y):
        out = _prim(np.shape(x))
        out[..., st.IRHO] = 1.0
        out[..., st.IV1] = 0.0
        out[..., st.IV2] = 0.0
        out[..., st.IV3] = 0.0
        out[..., st.IB1] = 0.0
        out[..., st.IB2] = b_ambient
        out[..., st.IB3] = 0.0
        out[..., st.IP] = pressure
        return out

    return fn


def _jet_bottom_bc(beam_conserved):
    """Fixed beam state under nozzle cells, outflow elsewhere."""

    def fn(interior, mesh, basis, t):
        ghost = np.array(interior)
        sel = np.abs(mesh.xc) <= JET_NOZZLE_HALFWIDTH
        ghost[sel] = 0.0
        ghost[sel, :, 0] = beam_conserved
        return ghost

    return fn


def _jet_left_bc(interior, mesh, basis, t):
    """Reflecting symmetry wall below y=25, outflow above."""
    ghost = mirror_coeffs(interior, basis, 0)
    above = mesh.yc > JET_WALL_YMAX
    ghost[above] = interior[above]
    return ghost


def _preflight(spec, times=(0.0,), n=96):
    x0, x1, y0, y1 = spec.domain
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(xs, ys)
    eos = EosSpec(spec.gamma)
    for t in times:
        prim = spec.exact(X, Y, t) if spec.exact else spec.initial(X, Y)
        U = st.conserved_from_primitive(prim, eos)
        rep = st.g1_report(U)
        if not rep.admissible.all():
            bad = int(np.sum(~rep.admissible))
            raise ValueError(
                f"inadmissible parameterization of '{spec.name}': "
                f"{bad} sample point(s) outside G_1 at t={t}")
    return spec


def make_problem(name, **params):
    """Build a ProblemSpec by name; see each branch for parameters.

    blast takes Ba (ambient field strength, studied values 0.1, 0.5, 20,
    100, 2000); jet takes Ba (0 or 'strong' for plasma beta 1e-3).
    """
    if name == "smooth_sine":
        _reject_params(name, params)
        spec = ProblemSpec(
            name=name, domain=(0.0, 1.0, 0.0, 1.0), gamma=5.0 / 3.0,
            initial=lambda x, y: _smooth_sine_exact(x, y, 0.0),
            bc=BoundarySpec.periodic(), t_end=1.0,
            exact=_smooth_sine_exact, tvb_m=0.0)
        return _preflight(spec, times=(0.0, 0.37, 1.0))

    if name == "alfven":
        _reject_params(name, params)
        L = np.sqrt(2.0)
        spec = ProblemSpec(
            name=name, domain=(0.0, L, 0.0, L), gamma=5.0 / 3.0,
            initial=lambda x, y: _alfven_exact(x, y, 0.0),
            bc=BoundarySpec.periodic(), t_end=1.0,
            exact=_alfven_exact, tvb_m=0.0)
        return _preflight(spec, times=(0.0, 0.37, 1.0))

    if name == "orszag_tang":
        _reject_params(name, params)
        twopi = 2.0 * np.pi
        spec = ProblemSpec(
            name=name, domain=(0.0, twopi, 0.0, twopi), gamma=4.0 / 3.0,
            initial=_orszag_tang_initial,
            bc=BoundarySpec.periodic(), t_end=2.818127)
        return _preflight(spec)

    if name == "blast":
        ba = float(params.pop("Ba", 0.1))
        _reject_params(name, params)
        spec = ProblemSpec(
            name=name, domain=(-6.0, 6.0, -6.0, 6.0), gamma=4.0 / 3.0,
            initial=_blast_initial(ba),
            bc=BoundarySpec.outflow(), t_end=4.0)
        return _preflight(spec)

    if name == "jet":
        ba = params.pop("Ba", 0.0)
        _reject_params(name, params)
        gamma = 5.0 / 3.0
        if isinstance(ba, str):
            if ba != "strong":
                raise ValueError(f"jet Ba must be a number or 'strong', got {ba!r}")
            ba = jet_strong_field(gamma)
        ba = float(ba)
        p = jet_pressure(gamma)
        eos = EosSpec(gamma)
        beam = np.array([JET_BEAM_RHO, 0.0, JET_BEAM_SPEED, 0.0,
                         0.0, ba, 0.0, p])
        beam_U = st.conserved_from_primitive(beam[None, :], eos)[0]
        if not st.g1_report(beam_U[None, :]).admissible.all():
            raise ValueError("inadmissible parameterization of 'jet': beam state")
        spec = ProblemSpec(
            name=name, domain=(0.0, 12.0, 0.0, 30.0), gamma=gamma,
            initial=_jet_initial(ba, p),
            bc=BoundarySpec(left=_jet_left_bc, right="outflow",
                            bottom=_jet_bottom_bc(beam_U), top="outflow"),
            t_end=30.0)
        return _preflight(spec)

    raise ValueError(f"unknown problem {name!r}")


def _reject_params(name, params):
    if params:
        raise ValueError(f"unknown parameter(s) for {name!r}: "
                         + ", ".join(sorted(params)))


@dataclass
class DiscretizedProblem:
    name: str
    mesh: CartesianMesh
    basis: object
    quad: object
    bc: BoundarySpec
    eos: EosSpec
    initial: Callable
    exact: Optional[Callable]
    t_end: float
    tvb_m: float
    gamma: float


def discretize(spec, nx, ny=None, k=2):
    """Mesh a ProblemSpec; ny defaults to keeping cells square."""
    x0, x1, y0, y1 = spec.domain
    if ny is None:
        ny = int(round(nx * (y1 - y0) / (x1 - x0)))
    mesh = CartesianMesh(spec.domain, nx, ny)
    return DiscretizedProblem(
        name=spec.name, mesh=mesh,
        basis=build_basis(k, mesh.dx, mesh.dy),
        quad=build_quadrature(k, mesh.dx, mesh.dy),
        bc=spec.bc, eos=EosSpec(spec.gamma),
        initial=spec.initial, exact=spec.exact,
        t_end=spec.t_end, tvb_m=spec.tvb_m, gamma=spec.gamma)
