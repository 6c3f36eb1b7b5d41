"""Run configuration, snapshot files, error norms, and the command line.

Snapshots are plain text: a short key=value header, one row of cell-mean
primitives and conserved values per cell, and a companion .modal file
holding every polynomial coefficient at 17 significant digits, which is
enough to restore float64 bitwise for exact restarts.
"""

import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import state as st
from ._kernels import recover_prim_batch
from .dg_operator import FieldState
from .eos import EosSpec
from .grid import CartesianMesh, build_basis, build_quadrature, evaluate
from .problems import discretize, make_problem
from .time_integrator import LimiterConfig, run

_MEAN_COLUMNS = "i j x y rho v1 v2 v3 p B1 B2 B3 D m1 m2 m3 E"


@dataclass
class RunConfig:
    problem: str = ""
    N: int = 0
    Nx: int = 0
    Ny: int = 0
    k: int = 2
    cfl: float = 0.15
    gamma: float = 0.0          # 0: problem default
    t_end: float = -1.0         # <0: problem default
    pcp: bool = True
    tvb_m: float = -1.0         # <0: problem default
    eps: float = -1.0           # <0: per-cell default
    snapshot_times: tuple = ()
    out_dir: str = "out"
    Ba: str = ""                # problem parameter, problems decide type
    audit: bool = False
    restart: str = ""
    grids: tuple = (10, 20, 40, 80, 160)
    warnings: list = field(default_factory=list)


def _to_bool(key, raw):
    low = raw.lower()
    if low in ("on", "true", "1", "yes"):
        return True
    if low in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"config key '{key}': cannot parse {raw!r} as on/off")


def _convert(key, raw, kind):
    try:
        if kind is bool:
            return _to_bool(key, raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            if key == "grids":
                return tuple(int(s) for s in raw.split(",") if s)
            return tuple(float(s) for s in raw.split(",") if s)
        return raw
    except ValueError as exc:
        raise ValueError(f"config key '{key}': cannot parse {raw!r}") from exc


def _assign(cfg, key, raw):
    key = key.replace("-", "_")
    for f in fields(RunConfig):
        if f.name == key and f.name != "warnings":
            setattr(cfg, key, _convert(key, raw, type(getattr(cfg, key))))
            return
    raise ValueError(f"unknown config key '{key}'")


def _split_tokens(tokens):
    """key=value and --key value / --key=value forms, normalized."""
    pairs = []
    it = iter(tokens)
    for tok in it:
        if tok.startswith("--"):
            body = tok[2:]
            if "=" in body:
                key, val = body.split("=", 1)
            else:
                key = body
                try:
                    val = next(it)
                except StopIteration:
                    raise ValueError(f"config key '{key}': missing value")
        elif "=" in tok:
            key, val = tok.split("=", 1)
        else:
            raise ValueError(f"cannot parse config token {tok!r}; "
                             "expected key=value")
        pairs.append((key, val))
    return pairs


def parse_config(path=None, flags=()):
    """RunConfig from an optional key=value file plus override tokens."""
    cfg = RunConfig()
    if path is not None:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"cannot parse config line {line!r}")
                key, val = line.split("=", 1)
                _assign(cfg, key.strip(), val.strip())
    for key, val in _split_tokens(list(flags)):
        _assign(cfg, key, val)
    if cfg.cfl >= 1.0 / 6.0:
        cfg.warnings.append(
            f"cfl={cfg.cfl} is outside the provable k=2 bound (1/6)")
    return cfg


def _resolved_lines(cfg, spec, nx, ny, t_end, tvb_m):
    lines = [f"problem={spec.name}"]
    if cfg.Ba != "":
        lines.append(f"Ba={cfg.Ba}")
    lines += [f"Nx={nx}", f"Ny={ny}", f"k={cfg.k}", f"cfl={cfg.cfl:.17g}",
              f"gamma={spec.gamma:.17g}", f"t_end={t_end:.17g}",
              f"pcp={'on' if cfg.pcp else 'off'}", f"tvb_m={tvb_m:.17g}",
              f"eps={cfg.eps:.17g}" if cfg.eps >= 0 else "eps=per-cell",
              f"out_dir={cfg.out_dir}",
              f"audit={'on' if cfg.audit else 'off'}"]
    if cfg.snapshot_times:
        lines.append("snapshot_times="
                     + ",".join(f"{s:.17g}" for s in cfg.snapshot_times))
    if cfg.restart:
        lines.append(f"restart={cfg.restart}")
    lines += [f"warning={w}" for w in cfg.warnings]
    return lines


def write_snapshot(state, path, eos, problem=""):
    """Text snapshot of cell means plus a .modal coefficient sidecar."""
    mesh, basis = state.mesh, state.basis
    ny, nx = mesh.ny, mesh.nx
    means = state.coeffs[..., 0]
    prim, _ = recover_prim_batch(means, eos)
    X, Y = np.meshgrid(mesh.xc, mesh.yc)
    x0, x1, y0, y1 = mesh.domain
    head = (f"# time={state.t:.17g} Nx={nx} Ny={ny} "
            f"gamma={eos.gamma:.17g} k={basis.k}\n"
            f"# problem={problem} domain={x0:.17g},{x1:.17g},{y0:.17g},{y1:.17g}\n"
            f"# {_MEAN_COLUMNS}\n")
    with open(path, "w") as fh:
        fh.write(head)
        for j in range(ny):
            for i in range(nx):
                p = prim[j, i]
                u = means[j, i]
                vals = [p[st.IRHO], p[st.IV1], p[st.IV2], p[st.IV3],
                        p[st.IP], p[st.IB1], p[st.IB2], p[st.IB3],
                        u[st.ID], u[st.IM1], u[st.IM2], u[st.IM3], u[st.IE]]
                fh.write(f"{i} {j} {X[j, i]:.17g} {Y[j, i]:.17g} "
                         + " ".join(f"{v:.17g}" for v in vals) + "\n")
    M = basis.scalar_dim
    with open(path + ".modal", "w") as fh:
        fh.write(f"# time={state.t:.17g} Nx={nx} Ny={ny} "
                 f"gamma={eos.gamma:.17g} k={basis.k} M={M}\n")
        np.savetxt(fh, state.coeffs.reshape(ny * nx * 8, M), fmt="%.17g")
    return path


def _parse_header_line(line):
    out = {}
    for tok in line.lstrip("# ").split():
        if "=" in tok:
            key, val = tok.split("=", 1)
            out[key] = val
    return out

def read_snapshot(path):
    """(FieldState-or-None, meta dict) from a snapshot file.

    The state is rebuilt bitwise from the .modal sidecar when present;
    otherwise only the meta dict (with the cell-mean table) is returned.
    """
    with open(path) as fh:
        h1 = _parse_header_line(fh.readline())
        h2 = _parse_header_line(fh.readline())
    try:
        meta = {
            "time": float(h1["time"]), "Nx": int(h1["Nx"]),
            "Ny": int(h1["Ny"]), "gamma": float(h1["gamma"]),
            "k": int(h1["k"]), "problem": h2.get("problem", ""),
            "domain": tuple(float(s) for s in h2["domain"].split(",")),
        }
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed snapshot header in {path}: {exc}")
    table = np.loadtxt(path, comments="#", ndmin=2)
    if table.shape != (meta["Nx"] * meta["Ny"], 17):
        raise ValueError(
            f"snapshot {path}: expected {meta['Nx'] * meta['Ny']} rows of 17 "
            f"columns, found shape {table.shape}")
    meta["means"] = table

    modal = path + ".modal"
    if not os.path.exists(modal):
        return None, meta
    mesh = CartesianMesh(meta["domain"], meta["Nx"], meta["Ny"])
    basis = build_basis(meta["k"], mesh.dx, mesh.dy)
    quad = build_quadrature(meta["k"], mesh.dx, mesh.dy)
    raw = np.loadtxt(modal, comments="#", ndmin=2)
    M = basis.scalar_dim
    if raw.shape != (meta["Ny"] * meta["Nx"] * 8, M):
        raise ValueError(f"modal sidecar {modal}: bad shape {raw.shape}")
    coeffs = raw.reshape(meta["Ny"], meta["Nx"], 8, M)
    return FieldState(coeffs, mesh, basis, quad, t=meta["time"]), meta


def error_norms(state, exact, t, eos):
    """Area-weighted l1 and l2 norms per conserved component vs a closed form.

    Both are evaluated with the interior Gauss rule: l1 is the mean of the
    absolute difference over the domain, l2 the root mean square.
    """
    if exact is None:
        raise ValueError("error norms require a problem with an exact solution")
    mesh, quad = state.mesh, state.quad
    num = evaluate(state.coeffs, state.basis, quad.interior_pts)
    X, Y = mesh.phys_points(quad.interior_pts)
    ref = st.conserved_from_primitive(exact(X, Y, t), eos)
    diff = num - ref
    w = quad.interior_w[:, None]
    frac = 1.0 / (mesh.nx * mesh.ny)
    l1 = np.sum(np.abs(diff) * w, axis=(0, 1, 2)) * frac
    l2 = np.sqrt(np.sum(diff * diff * w, axis=(0, 1, 2)) * frac)
    return l1, l2


def convergence_suite(spec, grids, t_end=None, k=2, cfl=0.15, eps=None,
                      path=None, progress=None):
    """Error table over a grid family; returns rows, optionally writes them.

    Rows are (N, l1, l2, order_l1, order_l2) with the vector norms
    aggregated over components (sum for l1, root-sum-square for l2) and
    orders as log2 ratios between consecutive grids; the first row has no
    order entries.
    """
    if spec.exact is None:
        raise ValueError(f"problem '{spec.name}' has no exact solution")
    t_end = spec.t_end if t_end is None else t_end
    limiter = LimiterConfig(pcp=True, tvb_m=spec.tvb_m,
                            eps=None if eps is None or eps < 0 else eps)
    rows = []
    prev = None
    for N in grids:
        prob = discretize(spec, N, k=k)
        result = run(prob, t_end=t_end, cfl=cfl, limiter=limiter)
        if result.breakdown is not None:
            raise RuntimeError(
                f"{spec.name} N={N}: breakdown {result.breakdown}")
        l1c, l2c = error_norms(result.state, spec.exact, t_end, prob.eos)
        l1 = float(np.sum(l1c))
        l2 = float(np.sqrt(np.sum(l2c * l2c)))
        if prev is None:
            rows.append((N, l1, l2, None, None))
        else:
            rows.append((N, l1, l2, np.log2(prev[1] / l1) / np.log2(N / prev[0]),
                         np.log2(prev[2] / l2) / np.log2(N / prev[0])))
        prev = (N, l1, l2)
        if progress is not None:
            progress(rows[-1])
    if path is not None:
        write_convergence_table(rows, path)
    return rows


def write_convergence_table(rows, path):
    with open(path, "w") as fh:
        fh.write("# N l1 l2 order_l1 order_l2\n")
        for row in rows:
            N, l1, l2, o1, o2 = row
            if o1 is None:
                fh.write(f"{N} {l1:.17g} {l2:.17g}\n")
            else:
                fh.write(f"{N} {l1:.17g} {l2:.17g} {o1:.6g} {o2:.6g}\n")
    return path


def read_convergence_table(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) == 3:
                rows.append((int(parts[0]), float(parts[1]), float(parts[2]),
                             None, None))
            else:
                rows.append((int(parts[0]), float(parts[1]), float(parts[2]),
                             float(parts[3]), float(parts[4])))
    return rows


def _build_problem(cfg):
    params = {}
    if cfg.Ba != "":
        try:
            params["Ba"] = float(cfg.Ba)
        except ValueError:
            params["Ba"] = cfg.Ba
    spec = make_problem(cfg.problem, **params)
    if cfg.gamma > 0.0:
        spec.gamma = cfg.gamma
    return spec


def cmd_run(cfg, out=None):
    out = sys.stdout if out is None else out
    if not cfg.problem:
        raise ValueError("config key 'problem' is required")
    spec = _build_problem(cfg)
    nx = cfg.Nx or cfg.N
    if not nx and not cfg.restart:
        raise ValueError("config key 'N' (or 'Nx') is required for run")
    ny = cfg.Ny or None

    initial_state = None
    if cfg.restart:
        initial_state, meta = read_snapshot(cfg.restart)
        if initial_state is None:
            raise ValueError(
                f"restart snapshot {cfg.restart} has no .modal sidecar")
        if not np.allclose(meta["domain"], spec.domain, rtol=1e-14):
            raise ValueError(
                f"restart snapshot domain {meta['domain']} does not match "
                f"problem '{spec.name}' domain {spec.domain}")
        nx, ny = meta["Nx"], meta["Ny"]
        cfg.k = meta["k"]

    prob = discretize(spec, nx, ny=ny, k=cfg.k)
    t_end = spec.t_end if cfg.t_end < 0 else cfg.t_end
    tvb_m = spec.tvb_m if cfg.tvb_m < 0 else cfg.tvb_m
    limiter = LimiterConfig(pcp=cfg.pcp,
                            eps=None if cfg.eps < 0 else cfg.eps,
                            tvb_m=tvb_m)

    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "config.resolved"), "w") as fh:
        fh.write("\n".join(_resolved_lines(cfg, spec, prob.mesh.nx,
                                           prob.mesh.ny, t_end, tvb_m)) + "\n")
    for w in cfg.warnings:
        print(f"warning: {w}", file=out)

    def snap(state):
        name = os.path.join(cfg.out_dir, f"snap_t{state.t:.6f}.dat")
        write_snapshot(state, name, prob.eos, problem=spec.name)
        print(f"wrote {name}", file=out)

    result = run(prob, t_end=t_end, cfl=cfg.cfl, limiter=limiter,
                 snapshot_times=cfg.snapshot_times, on_snapshot=snap,
                 log=os.path.join(cfg.out_dir, "run.log"),
                 audit=cfg.audit, initial_state=initial_state)

    final = os.path.join(cfg.out_dir, "final.dat")
    write_snapshot(result.state, final, prob.eos, problem=spec.name)
    print(f"wrote {final}", file=out)
    drift = abs(result.mass_final - result.mass_initial)
    print(f"steps={result.steps} t={result.state.t:.17g} "
          f"mass_drift={drift:.3e} sigma_max={result.sigma_max:.3e} "
          f"tvb_cells={result.tvb_cells} pcp_cells={result.pcp_cells}",
          file=out)
    if cfg.audit:
        print(f"audit_violations={result.audit_violations}", file=out)
    if result.breakdown is not None:
        b = result.breakdown
        print(f"breakdown recorded at step {b['step']} t={b['time']:.12e}: "
              f"{b['reason']}", file=out)
    return 0


def cmd_converge(cfg, out=None):
    out = sys.stdout if out is None else out
    if not cfg.problem:
        raise ValueError("config key 'problem' is required")
    spec = _build_problem(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    t_end = None if cfg.t_end < 0 else cfg.t_end
    path = os.path.join(cfg.out_dir, "convergence.dat")

    def progress(row):
        N, l1, l2, o1, o2 = row
        if o1 is None:
            print(f"N={N} l1={l1:.6e} l2={l2:.6e}", file=out)
        else:
            print(f"N={N} l1={l1:.6e} l2={l2:.6e} "
                  f"order_l1={o1:.3f} order_l2={o2:.3f}", file=out)

    convergence_suite(spec, cfg.grids, t_end=t_end, k=cfg.k, cfl=cfg.cfl,
                      eps=None if cfg.eps < 0 else cfg.eps, path=path,
                      progress=progress)
    print(f"wrote {path}", file=out)
    return 0


def cmd_check(cfg, out=None):
    out = sys.stdout if out is None else out
    from . import audits

    checks = [
        ("source-inequality margins (1e5 samples)",
         lambda: audits.audit_lemma34(100_000),
         lambda v: v >= -1e-12, "worst relative margin"),
        ("flux-split margins (1e5 samples)",
         lambda: audits.audit_lemma36(100_000),
         lambda v: v >= -1e-12, "worst relative margin"),
        ("admissible-set convexity (1e5 pairs)",
         lambda: audits.audit_convexity(100_000)[0],
         lambda v: v == 1.0, "admissible fraction"),
        ("recovery round trip, stressed (1e4 samples)",
         lambda: audits.audit_round_trip(10_000, stress=True),
         lambda v: v <= 1e-8, "max scaled error"),
        ("limiter mean conservation (1e3 fields)",
         lambda: audits.audit_limiter_conservation(1000),
         lambda v: v <= 1e-13, "worst relative drift"),
        ("weak positivity of mean update (1e3 fields)",
         lambda: audits.audit_weak_pcp(1000)[0],
         lambda v: v == 0, "violating cells"),
    ]
    failed = 0
    for name, fn, ok, label in checks:
        value = fn()
        good = ok(value)
        failed += 0 if good else 1
        print(f"{'PASS' if good else 'FAIL'} {name}: {label} = {value:.6g}",
              file=out)
    return 1 if failed else 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: rmhd-dg {run|converge|check} [--config FILE] "
              "[key=value ...]\n"
              "keys: problem N Nx Ny k cfl gamma t_end pcp tvb_m eps "
              "snapshot_times out_dir Ba audit restart grids")
        return 0 if argv else 2
    cmd, rest = argv[0], argv[1:]
    path = None
    flags = []
    it = iter(rest)
    for tok in it:
        if tok == "--config":
            try:
                path = next(it)
            except StopIteration:
                print("error: --config needs a path", file=sys.stderr)
                return 2
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            flags.append(tok)
    try:
        cfg = parse_config(path, flags)
        if cmd == "run":
            return cmd_run(cfg)
        if cmd == "converge":
            return cmd_converge(cfg)
        if cmd == "check":
            return cmd_check(cfg)
        print(f"error: unknown command {cmd!r}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
