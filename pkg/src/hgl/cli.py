"""Command line entry point.

One executable, four solver families plus figure reproduction:

    hgl selfsim {shoot,sweep,verify} ...
    hgl stationary {solve,continue} ...
    hgl radial {solve,continue} ...
    hgl evolve ...
    hgl figures fig1 ...

Every run writes its data files plus exactly one ``manifest.json`` into
the output directory.  Exit codes: 0 success, 2 usage error, 3 a solver
reported failure (diagnostics are still written).

Flag values take precedence over the optional ``--config`` file (flat
``key=value`` lines, keys matching long option names with dashes replaced
by underscores), which takes precedence over built-in defaults.  The
``HGL_THREADS`` environment variable caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import evolution as ev
from . import radial as rd
from . import selfsim as ss
from . import stationary as st
from .grid import BC_DIRICHLET, BC_NAVIER, GridField2D, GridSpec, read_field_csv, sobolev_norms, write_field_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3

# Figure-1 reproduction: the four documented slope sets.  Targets are the
# plot windows; any slope that blows up inside its window is re-shot to
# 90% of the observed blow-up abscissa so the bundle holds complete
# (ReachedEnd) trajectories.  Colors follow the caption labels.
FIG1_PANELS = {
    "a": {"slopes": [-1.0, -10.0, -1e2], "eta_max": 2.0,
          "colors": ["red", "green", "blue"]},
    "b": {"slopes": [-1.0, -1e2, -1e4], "eta_max": 0.25,
          "colors": ["red", "green", "blue"]},
    "c": {"slopes": [-1e4, -1e5, -1e6, -1e7], "eta_max": 0.5,
          "colors": ["yellow", "red", "green", "blue"]},
    "d": {"slopes": [-1e4, -1e5, -8.5e5, -2.4e6], "eta_max": 0.5,
          "colors": ["yellow", "red", "green", "blue"]},
}


def _threads() -> int:
    raw = os.environ.get("HGL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"config line without '=': {line!r}")
        key, _, value = line.partition("=")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


class _Manifest:
    def __init__(self, subcommand: str, params: dict, outdir: Path):
        self.data = {
            "subcommand": subcommand,
            "parameters": params,
            "inputs": [],
            "outputs": [],
            "tool_version": __version__,
            "schema_version": 1,
        }
        self.outdir = outdir
        self.t0 = time.perf_counter()

    def add_output(self, path: Path):
        rel = str(path.relative_to(self.outdir))
        if rel not in self.data["outputs"]:
            self.data["outputs"].append(rel)

    def write(self):
        self.data["duration_seconds"] = time.perf_counter() - self.t0
        (self.outdir / "manifest.json").write_text(
            json.dumps(self.data, indent=2) + "\n")


def _write_json(manifest: _Manifest, name: str, payload: dict) -> Path:
    path = manifest.outdir / name
    path.write_text(json.dumps(payload, indent=2) + "\n")
    manifest.add_output(path)
    return path


def _shoot_config(args) -> ss.ShootConfig:
    return ss.ShootConfig(
        slope=args.slope, eta0=args.eta0, eta_max=args.eta_max,
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, g_cap=args.g_cap,
    )


def _cmd_selfsim_shoot(args, outdir: Path, manifest: _Manifest) -> int:
    res = ss.shoot(_shoot_config(args))
    path = outdir / "traj.csv"
    ss.write_trajectory_csv(res, path)
    manifest.add_output(path)
    _write_json(manifest, "summary.json", ss.summary_dict(res))
    return EXIT_SOLVER if res.termination == ss.TERM_STEP_UNDERFLOW else EXIT_OK


def _cmd_selfsim_sweep(args, outdir: Path, manifest: _Manifest) -> int:
    slopes = [float(tok) for tok in args.slopes.split(",") if tok]
    template = ss.ShootConfig(
        slope=0.0, eta0=args.eta0, eta_max=args.eta_max,
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, g_cap=args.g_cap,
    )
    rep = ss.sweep(slopes, template, outdir=outdir, max_workers=_threads())
    for a in slopes:
        if rep.results[a] is not None:
            manifest.add_output(outdir / f"slope_{a:g}.csv")
    manifest.add_output(outdir / "summary.json")
    return EXIT_SOLVER if rep.errors else EXIT_OK


def _cmd_selfsim_verify(args, outdir: Path, manifest: _Manifest) -> int:
    res = ss.read_trajectory_csv(args.input)
    manifest.data["inputs"].append(str(args.input))
    times = [float(tok) for tok in args.times.split(",") if tok]
    if res.termination != ss.TERM_REACHED_END:
        _write_json(manifest, "verify.json", {
            "input": str(args.input), "error":
            f"trajectory terminated {res.termination}; need ReachedEnd"})
        return EXIT_SOLVER
    rep = ss.verify_ansatz(res, times, nr=args.nr)
    traj = ss.reconstruct_f(res)
    _write_json(manifest, "verify.json", {
        "input": str(args.input),
        "max_residual": rep.max_residual,
        "per_time": [{"t": t, "max_residual": v} for t, v in rep.per_time],
        "r_window": list(rep.r_window),
        "nr": rep.nr,
        "cancellation_residual": traj.cancellation_residual,
    })
    return EXIT_OK


def _resolve_h(kind: str, grid: GridSpec, bc: str) -> GridField2D:
    if kind == "const":
        return st.h_const(grid, bc)
    if kind == "sine":
        return st.h_sine(grid, bc)
    if kind.startswith("file:"):
        h = read_field_csv(kind[5:])
        if h.spec != grid:
            raise SystemExit(f"forcing grid {h.spec} does not match --nx/--ny")
        return GridField2D(grid, h.values, bc)
    raise SystemExit(f"unknown forcing {kind!r}: use const, sine or file:PATH")


def _energy_dict(rep: st.EnergyReport) -> dict:
    return {"quadratic": rep.quadratic, "cubic": rep.cubic,
            "linear": rep.linear, "total": rep.total}


def _cmd_stationary_solve(args, outdir: Path, manifest: _Manifest) -> int:
    grid = GridSpec(args.nx, args.ny or args.nx)
    spec = st.ProblemSpec(grid=grid, bc=args.bc,
                          h=_resolve_h(args.h, grid, args.bc), lam=args.lam)
    summary = {"lambda": args.lam, "bc": args.bc, "method": args.method,
               "nx": grid.nx, "ny": grid.ny}
    try:
        if args.method == "picard":
            sol = st.fixed_point_solve(spec, tol=args.tol, max_iter=args.max_iter)
        else:
            sol = st.descent_solve(spec, tol=args.tol, max_iter=args.max_iter)
    except (st.DivergenceError, st.SolverError) as exc:
        summary |= {"converged": False, "failure": type(exc).__name__,
                    "detail": str(exc)}
        _write_json(manifest, "summary.json", summary)
        return EXIT_SOLVER
    path = outdir / "u.csv"
    write_field_csv(sol.u, path)
    manifest.add_output(path)
    summary |= {
        "converged": sol.converged, "iterations": sol.iterations,
        "residual": sol.residual, "energy": _energy_dict(sol.energy),
        "norm_w22": sobolev_norms(sol.u).sobolev22,
    }
    _write_json(manifest, "summary.json", summary)
    return EXIT_OK if sol.converged else EXIT_SOLVER


def _cmd_stationary_continue(args, outdir: Path, manifest: _Manifest) -> int:
    grid = GridSpec(args.nx, args.ny or args.nx)
    lams = [float(tok) for tok in args.lambda_grid.split(",") if tok]
    spec = st.ProblemSpec(grid=grid, bc=args.bc,
                          h=_resolve_h(args.h, grid, args.bc), lam=0.0)
    table = st.continuation_lambda(spec, lams, tol=args.tol,
                                   max_iter=args.max_iter)
    lines = ["lambda,converged,residual,norm_w22,iterations"]
    for row in table.rows:
        lines.append(",".join([
            repr(row.lam), str(int(row.converged)),
            "" if row.residual is None else repr(row.residual),
            "" if row.norm_w22 is None else repr(row.norm_w22),
            str(row.iterations),
        ]))
    path = outdir / "bracket_table.csv"
    path.write_text("\n".join(lines) + "\n")
    manifest.add_output(path)
    lam_ok, lam_fail = table.bracket
    _write_json(manifest, "summary.json", {
        "bc": args.bc, "bracket": {"lambda_ok": lam_ok, "lambda_fail": lam_fail},
        "n_points": len(table.rows),
    })
    return EXIT_OK


def _cmd_radial_solve(args, outdir: Path, manifest: _Manifest) -> int:
    prob = rd.RadialProblem.with_profile(args.nr, args.bc, args.lam)
    summary = {"lambda": args.lam, "bc": args.bc, "nr": args.nr}
    try:
        sol = rd.radial_solve(prob, tol=args.tol)
    except rd.NewtonError as exc:
        summary |= {"converged": False, "failure": "NewtonError", "detail": str(exc)}
        _write_json(manifest, "summary.json", summary)
        return EXIT_SOLVER
    lines = ["r,u,up,lap"]
    for vals in zip(prob.r, sol.u, sol.up, sol.lap):
        lines.append(",".join(repr(float(v)) for v in vals))
    path = outdir / "radial.csv"
    path.write_text("\n".join(lines) + "\n")
    manifest.add_output(path)
    summary |= {"converged": sol.converged, "iterations": sol.iterations,
                "residual": sol.residual,
                "max_abs_u": float(np.max(np.abs(sol.u)))}
    _write_json(manifest, "summary.json", summary)
    return EXIT_OK if sol.converged else EXIT_SOLVER


def _cmd_radial_continue(args, outdir: Path, manifest: _Manifest) -> int:
    prob = rd.RadialProblem.with_profile(args.nr, args.bc, 0.0)
    steps = np.geomspace(args.lambda_min, args.lambda_max, args.n_steps)
    bracket = rd.radial_continuation(prob, steps, tol=args.tol)
    lines = ["lambda,converged,norm_sup"]
    for s in bracket.steps:
        lines.append(",".join([
            repr(s.lam), str(int(s.converged)),
            "" if s.norm_sup is None else repr(s.norm_sup)]))
    path = outdir / "continuation.csv"
    path.write_text("\n".join(lines) + "\n")
    manifest.add_output(path)
    _write_json(manifest, "summary.json", {
        "bc": args.bc, "nr": args.nr,
        "bracket": {"lambda_ok": bracket.lam_ok, "lambda_fail": bracket.lam_fail,
                    "relative_width": bracket.relative_width},
    })
    return EXIT_OK


def _resolve_ic(kind: str, grid: GridSpec, bc: str) -> GridField2D:
    if kind.startswith("sine:"):
        amp = float(kind[5:])
        f = st.h_sine(grid, bc)
        return f.with_values(amp * f.values)
    if kind.startswith("file:"):
        f = read_field_csv(kind[5:])
        if f.spec != grid:
            raise SystemExit("initial condition grid does not match --nx/--ny")
        return GridField2D(grid, f.values, bc)
    raise SystemExit(f"unknown initial condition {kind!r}: use sine:A or file:PATH")


def _cmd_evolve(args, outdir: Path, manifest: _Manifest) -> int:
    grid = GridSpec(args.nx, args.ny or args.nx)
    spec = st.ProblemSpec(grid=grid, bc=args.bc,
                          h=_resolve_h(args.h, grid, args.bc), lam=args.lam)
    u0 = _resolve_ic(args.ic, grid, args.bc)
    cfg = ev.EvolutionConfig(
        spec=spec, u0=u0, dt=args.dt, t_max=args.t_max,
        snapshot_every=args.snapshot_every,
        blowup_norm_cap=args.norm_cap,
    )
    try:
        trace = ev.evolve(cfg)
    except st.SolverError as exc:
        _write_json(manifest, "summary.json", {
            "outcome": "Aborted", "failure": "SolverError", "detail": str(exc)})
        return EXIT_SOLVER
    with_energy = args.bc == BC_DIRICHLET
    lines = ["t,sobolev22,energy" if with_energy else "t,sobolev22"]
    for k, (t, n) in enumerate(zip(trace.times, trace.sobolev22)):
        row = [repr(float(t)), repr(float(n))]
        if with_energy:
            row.append(repr(float(trace.energies[k])))
        lines.append(",".join(row))
    path = outdir / "norms.csv"
    path.write_text("\n".join(lines) + "\n")
    manifest.add_output(path)
    for k, (t, field) in enumerate(trace.snapshots):
        snap = outdir / f"snapshot_{k:04d}.csv"
        write_field_csv(field, snap)
        manifest.add_output(snap)
    _write_json(manifest, "summary.json", {
        "outcome": trace.outcome,
        "t_star_estimate": trace.t_star_estimate,
        "t_end": float(trace.times[-1]),
        "final_norm": float(trace.sobolev22[-1]),
        "n_steps": len(trace.times) - 1,
        "snapshots": [{"index": k, "t": float(t)}
                      for k, (t, _) in enumerate(trace.snapshots)],
    })
    return EXIT_OK


def reproduce_figure1(outdir: Path, rel_tol: float = 1e-10,
                      abs_tol: float = 1e-12) -> dict:
    """Run the four documented slope sets; one CSV bundle per panel."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {}
    for panel, info in FIG1_PANELS.items():
        panel_dir = outdir / f"panel_{panel}"
        panel_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for slope, color in zip(info["slopes"], info["colors"]):
            eta0 = min(1e-3, 0.1 / np.sqrt(abs(slope)))
            cfg = ss.ShootConfig(slope=slope, eta0=eta0, eta_max=info["eta_max"],
                                 rel_tol=rel_tol, abs_tol=abs_tol)
            try:
                res = ss.shoot(cfg)
                if res.termination == ss.TERM_BLOWUP:
                    # stop short of the blow-up so the bundle holds a
                    # complete trajectory over its plot window
                    res = ss.shoot(replace(cfg, eta_max=0.9 * float(res.eta[-1])))
                name = f"slope_{slope:g}.csv"
                ss.write_trajectory_csv(res, panel_dir / name)
                entries.append(ss.summary_dict(res) | {"file": name, "color": color})
            except Exception as exc:  # per-slope failures are data
                entries.append({"slope": slope, "color": color, "error": str(exc)})
        (panel_dir / "summary.json").write_text(
            json.dumps({"panel": panel, "trajectories": entries}, indent=2) + "\n")
        report[panel] = entries
    return report


def _cmd_figures_fig1(args, outdir: Path, manifest: _Manifest) -> int:
    report = reproduce_figure1(outdir, rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    ok = True
    for panel, entries in report.items():
        for entry in entries:
            if "file" in entry:
                manifest.add_output(outdir / f"panel_{panel}" / entry["file"])
            else:
                ok = False
        manifest.add_output(outdir / f"panel_{panel}" / "summary.json")
    _write_json(manifest, "summary.json",
                {"panels": {p: e for p, e in report.items()}})
    return EXIT_OK if ok else EXIT_SOLVER


def _add_common(p, cfg, outdir_default):
    p.add_argument("--outdir", default=str(cfg.get("outdir", outdir_default)),
                   help="output directory (created if missing)")


def _build_parser(cfg: dict) -> argparse.ArgumentParser:
    def g(key, default, cast):
        return cast(cfg[key]) if key in cfg else default

    parser = argparse.ArgumentParser(
        prog="hgl",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--version", action="version", version=__version__)
    top = parser.add_subparsers(dest="family", required=True)

    def add_shoot_opts(p, with_slope):
        if with_slope:
            p.add_argument("--slope", type=float, required="slope" not in cfg,
                           default=g("slope", None, float))
        p.add_argument("--eta0", type=float, default=g("eta0", 1e-3, float))
        p.add_argument("--eta-max", type=float, default=g("eta_max", 20.0, float))
        p.add_argument("--rel-tol", type=float, default=g("rel_tol", 1e-10, float))
        p.add_argument("--abs-tol", type=float, default=g("abs_tol", 1e-12, float))
        p.add_argument("--g-cap", type=float, default=g("g_cap", 1e8, float))

    selfsim = top.add_parser("selfsim", help="self-similar profile shooting")
    sub = selfsim.add_subparsers(dest="sub", required=True)
    p = sub.add_parser("shoot", help="one trajectory")
    add_shoot_opts(p, with_slope=True)
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_selfsim_shoot, name="selfsim shoot")
    p = sub.add_parser("sweep", help="one trajectory per slope")
    p.add_argument("--slopes", required="slopes" not in cfg,
                   default=cfg.get("slopes"), help="comma separated g'(0) values")
    add_shoot_opts(p, with_slope=False)
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_selfsim_sweep, name="selfsim sweep")
    p = sub.add_parser("verify", help="full-equation residual of a trajectory")
    p.add_argument("--input", required=True, help="trajectory CSV")
    p.add_argument("--times", default=g("times", "1.0,2.0", str))
    p.add_argument("--nr", type=int, default=g("nr", 96, int))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_selfsim_verify, name="selfsim verify")

    def add_grid_opts(p):
        p.add_argument("--bc", choices=[BC_NAVIER, BC_DIRICHLET],
                       default=g("bc", BC_NAVIER, str))
        p.add_argument("--nx", type=int, default=g("nx", 64, int))
        p.add_argument("--ny", type=int, default=g("ny", 0, int),
                       help="defaults to --nx")
        p.add_argument("--h", default=g("h", "const", str),
                       help="forcing: const, sine or file:PATH")

    stationary = top.add_parser("stationary", help="stationary solvers")
    sub = stationary.add_subparsers(dest="sub", required=True)
    p = sub.add_parser("solve", help="picard fixed point or energy descent")
    add_grid_opts(p)
    p.add_argument("--lambda", dest="lam", type=float,
                   default=g("lambda", 0.01, float))
    p.add_argument("--method", choices=["picard", "descent"],
                   default=g("method", "picard", str))
    p.add_argument("--tol", type=float, default=g("tol", 1e-10, float))
    p.add_argument("--max-iter", type=int, default=g("max_iter", 500, int))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_stationary_solve, name="stationary solve")
    p = sub.add_parser("continue", help="lambda continuation bracket table")
    add_grid_opts(p)
    p.add_argument("--lambda-grid", required="lambda_grid" not in cfg,
                   default=cfg.get("lambda_grid"),
                   help="comma separated increasing lambdas")
    p.add_argument("--tol", type=float, default=g("tol", 1e-10, float))
    p.add_argument("--max-iter", type=int, default=g("max_iter", 200, int))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_stationary_continue, name="stationary continue")

    radial = top.add_parser("radial", help="radial disc solvers")
    sub = radial.add_subparsers(dest="sub", required=True)
    p = sub.add_parser("solve", help="damped Newton at one lambda")
    p.add_argument("--bc", choices=[BC_NAVIER, BC_DIRICHLET],
                   default=g("bc", BC_DIRICHLET, str))
    p.add_argument("--nr", type=int, default=g("nr", 129, int))
    p.add_argument("--lambda", dest="lam", type=float,
                   default=g("lambda", 1.0, float))
    p.add_argument("--tol", type=float, default=g("tol", 1e-10, float))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_radial_solve, name="radial solve")
    p = sub.add_parser("continue", help="warm-started fold bracketing")
    p.add_argument("--bc", choices=[BC_NAVIER, BC_DIRICHLET],
                   default=g("bc", BC_DIRICHLET, str))
    p.add_argument("--nr", type=int, default=g("nr", 129, int))
    p.add_argument("--lambda-min", type=float, default=g("lambda_min", 1.0, float))
    p.add_argument("--lambda-max", type=float, default=g("lambda_max", 2000.0, float))
    p.add_argument("--n-steps", type=int, default=g("n_steps", 12, int))
    p.add_argument("--tol", type=float, default=g("tol", 1e-10, float))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_radial_continue, name="radial continue")

    p = top.add_parser("evolve", help="IMEX time stepping")
    add_grid_opts(p)
    p.add_argument("--lambda", dest="lam", type=float,
                   default=g("lambda", 0.0, float))
    p.add_argument("--ic", default=g("ic", "sine:0.01", str),
                   help="initial condition: sine:AMPLITUDE or file:PATH")
    p.add_argument("--dt", type=float, default=g("dt", 1e-4, float))
    p.add_argument("--t-max", type=float, default=g("t_max", 0.1, float))
    p.add_argument("--snapshot-every", type=int,
                   default=g("snapshot_every", 0, int))
    p.add_argument("--norm-cap", type=float, default=g("norm_cap", None,
                   lambda s: None if s in ("", "none") else float(s)))
    _add_common(p, cfg, ".")
    p.set_defaults(run=_cmd_evolve, name="evolve")

    figures = top.add_parser("figures", help="paper figure data bundles")
    sub = figures.add_subparsers(dest="sub", required=True)
    p = sub.add_parser("fig1", help="the four trajectory panels")
    p.add_argument("--rel-tol", type=float, default=g("rel_tol", 1e-10, float))
    p.add_argument("--abs-tol", type=float, default=g("abs_tol", 1e-12, float))
    _add_common(p, cfg, "fig1")
    p.set_defaults(run=_cmd_figures_fig1, name="figures fig1")

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        cfg = _load_config(known.config)
    except FileNotFoundError as exc:
        print(f"hgl: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE

    parser = _build_parser(cfg)
    args = parser.parse_args(argv)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in vars(args).items()
              if k not in ("run", "config", "family", "sub", "name")
              and not callable(v)}
    manifest = _Manifest(args.name, params, outdir)
    try:
        code = args.run(args, outdir, manifest)
    except SystemExit as exc:
        print(f"hgl: {exc}", file=sys.stderr)
        manifest.data["error"] = str(exc)
        manifest.write()
        return EXIT_USAGE
    finally:
        if "error" not in manifest.data:
            manifest.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
