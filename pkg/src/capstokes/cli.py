"""Command-line entry point: ``capstokes {simulate,verify,sweep,fields}``.

Exit codes: 0 success, 1 numerical failure or violated bound, 2 usage or
configuration error. Every command writes its CSV/JSON results and PNG
figures into ``--out`` (default ``./capstokes-out``).
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, RunConfig, load_config, parse_config
from .evolution import EvolutionError, mu_sweep, phi, simulate, worker_count
from .fields import NearBoundaryError, check_points, interior_stokes_residual, stokes_fields
from .grid import make_grid, sobolev_norm
from .potentials import OperatorSet
from .solver import NearSingularError, solve_density
from .verify import (gaussian_density, random_density, residual_anticommute, residual_comder,
                     residual_fder, residual_ffff, residual_geometry, residual_rellich,
                     standard_profile)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SUITES = ("all", "comder", "anticommute", "rellich", "fder", "ffff", "geometry")

# single-grid bounds on relative residuals (geometry: absolute max norm)
DEFAULT_BOUNDS = {
    "geometry": 1e-8,
    "comder": 2e-2,
    "anticommute": 2e-2,
    "rellich": 5e-2,
    "ffff": 1e-2,
    "fder": 1e-2,
}

FDER_CASES = ((0, 0), (1, 0), (1, 2), (2, 1))


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def _error(msg: str) -> None:
    print(f"capstokes: error: {msg}", file=sys.stderr)


def _config(args) -> RunConfig:
    if args.config is None:
        return parse_config({})
    return load_config(args.config)


def _fail(out: Path, exc: Exception, console) -> int:
    diag = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, EvolutionError):
        diag["diagnostics"] = exc.diagnostics
    if isinstance(exc, NearSingularError):
        diag["condition_estimate"] = exc.condition_estimate
    report.write_json(out / "failure.json", diag)
    _error(str(exc))
    console(f"diagnostics written to {out / 'failure.json'}")
    return EXIT_FAIL


def _run_summary(cfg: RunConfig, states) -> dict:
    grid = cfg.grid
    s = cfg.controls.norm_index
    last = states[-1]
    trail = [sobolev_norm(grid, st.f, s) for st in states]
    times = [st.t for st in states]
    pos = [(t, n) for t, n in zip(times, trail) if n > 0]
    rate = None
    if len(pos) >= 2:
        tt, nn = zip(*pos)
        rate = float(np.polyfit(tt, np.log(nn), 1)[0])
    # share of spectral energy in the upper half of resolved modes (smoothness proxy)
    fh = np.abs(np.fft.rfft(last.f)) ** 2
    tail = float(fh[fh.size // 2:].sum() / fh.sum()) if fh.sum() > 0 else 0.0
    return {
        "config": cfg.describe(),
        "times": times,
        "norm_index": s,
        "norm_trail": trail,
        "step_norms": last.norms,
        "norm_nonincreasing": bool(all(b <= a + cfg.controls.rtol * max(1.0, a)
                                       for a, b in zip(trail, trail[1:]))),
        "norm_decay_rate": rate,
        "mass": [float(grid.h * np.sum(st.f)) for st in states],
        "spectral_tail_fraction": tail,
        "solver": {"accepted_steps": last.accepted, "rejected_steps": last.rejected,
                   "final_contamination": last.contamination,
                   "last_local_error": last.last_error,
                   "last_solve": last.solver.as_dict() if last.solver else None},
    }


def cmd_simulate(args, console) -> int:
    cfg = _config(args)
    out = Path(args.out)
    f0 = cfg.initial_profile()
    try:
        states = simulate(cfg.grid, f0, cfg.params, cfg.T, cfg.output_times, cfg.controls)
    except (EvolutionError, NearSingularError) as exc:
        return _fail(out, exc, console)
    summary = _run_summary(cfg, states)
    report.write_trajectory_csv(out / "trajectory.csv", cfg.grid, states)
    report.write_json(out / "summary.json", summary)
    report.plot_profiles(out / "profiles.png", cfg.grid, states)
    report.plot_norms(out / "norms.png", summary["times"], summary["norm_trail"],
                      f"H^{cfg.controls.norm_index:g} norm")
    console(f"t = {states[-1].t:.6g}: |f|_H^{summary['norm_index']:g} = "
            f"{summary['norm_trail'][-1]:.10e} (initial {summary['norm_trail'][0]:.10e})")
    console(f"steps accepted {states[-1].accepted}, rejected {states[-1].rejected}; "
            f"results in {out}")
    return EXIT_OK


def _verify_setup(cfg: RunConfig):
    v = cfg.verify
    if not isinstance(v, dict):
        raise ConfigError("key 'verify' must be an object")
    unknown = sorted(set(v) - {"L", "N", "profile", "amplitude", "seed", "bounds"})
    if unknown:
        raise ConfigError(f"unknown key 'verify.{unknown[0]}'")
    try:
        grid = make_grid(float(v.get("L", 16.0)), int(v.get("N", 1024)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key 'verify.L'/'verify.N': {exc}")
    prof = v.get("profile", "standard")
    if prof == "standard":
        amp = v.get("amplitude", 0.3)
        if isinstance(amp, bool) or not isinstance(amp, (int, float)):
            raise ConfigError("key 'verify.amplitude' must be a number")
        f = standard_profile(grid, float(amp))
    elif prof == "flat":
        f = np.zeros(grid.N)
    else:
        raise ConfigError(f"key 'verify.profile' must be standard or flat, got {prof!r}")
    seed = v.get("seed", cfg.seed)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("key 'verify.seed' must be an integer")
    bounds = dict(DEFAULT_BOUNDS)
    for k, b in (v.get("bounds") or {}).items():
        if k not in bounds:
            raise ConfigError(f"unknown key 'verify.bounds.{k}'")
        if isinstance(b, bool) or not isinstance(b, (int, float)) or not b > 0:
            raise ConfigError(f"key 'verify.bounds.{k}' must be a positive number")
        bounds[k] = float(b)
    return grid, f, seed, bounds


def _verify_tasks(suite: str, grid, f, beta, ops):
    """(family, thunk) pairs for the requested suite."""
    tasks = []
    want = (lambda name: suite in ("all", name))
    if want("geometry"):
        tasks.append(("geometry", lambda: residual_geometry(grid, f)))
    if want("comder"):
        tasks.append(("comder", lambda: residual_comder(grid, f, beta, ops=ops)))
    if want("anticommute"):
        tasks.append(("anticommute", lambda: residual_anticommute(grid, f, beta, ops=ops)))
    if want("rellich"):
        for which in ("R1", "R2", "R5"):
            for side in ("+", "-"):
                tasks.append(("rellich", lambda w=which, s=side:
                              residual_rellich(grid, f, beta, w, s, ops=ops)))
    if want("ffff"):
        for side in ("+", "-"):
            tasks.append(("ffff", lambda s=side: residual_ffff(grid, f, beta, s, ops=ops)))
    if want("fder"):
        h = gaussian_density(grid)[0]
        for n, m in FDER_CASES:
            tasks.append(("fder", lambda n=n, m=m: residual_fder(grid, f, h, n, m)))
    return tasks


def cmd_verify(args, console) -> int:
    cfg = _config(args)
    grid, f, seed, bounds = _verify_setup(cfg)
    out = Path(args.out)
    beta = random_density(grid, seed)
    ops = OperatorSet(grid, f)
    # assemble the shared operators once before fanning out
    if args.suite != "geometry":
        _ = (ops.D, ops.Dstar, ops.B2, ops.B1, ops.Bp1, ops.Bp2)
    tasks = _verify_tasks(args.suite, grid, f, beta, ops)
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(tasks))) as pool:
        reports = list(pool.map(lambda t: t[1](), tasks))
    records, ok = [], True
    for (family, _), rep in zip(tasks, reports):
        d = rep.as_dict()
        d["bound"] = bounds[family]
        value = rep.residual_l2 if family == "geometry" else rep.relative
        d["passed"] = bool(math.isfinite(value) and value <= bounds[family])
        ok &= d["passed"]
        records.append(d)
        console(f"{'PASS' if d['passed'] else 'FAIL'}  {rep.identity_id:<14} "
                f"residual {rep.residual_l2:.3e}  relative {rep.relative:.3e}  "
                f"bound {bounds[family]:.1e}")
    report.write_json(out / "verify.json", records)
    report.plot_residuals(out / "verify.png", records)
    console(f"{sum(r['passed'] for r in records)}/{len(records)} within bounds "
            f"(L = {grid.L:g}, N = {grid.N}); report in {out / 'verify.json'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args, console) -> int:
    cfg = _config(args)
    if cfg.mu_plus_list is None:
        raise ConfigError("missing key 'mu_plus_list'")
    out = Path(args.out)
    f0 = cfg.initial_profile()
    try:
        rep = mu_sweep(cfg.grid, f0, cfg.params.mu, cfg.params.sigma, cfg.T, cfg.mu_plus_list,
                       cfg.output_times, cfg.controls, worker_count())
    except (EvolutionError, NearSingularError) as exc:
        return _fail(out, exc, console)
    report.write_trajectory_csv(out / "trajectory_baseline.csv", cfg.grid, rep.baseline)
    files = {}
    for m, states in rep.runs.items():
        name = f"trajectory_mu_plus_{m:g}.csv"
        report.write_trajectory_csv(out / name, cfg.grid, states)
        files[f"{m:g}"] = name
    summary = rep.as_dict()
    summary["config"] = cfg.describe()
    summary["trajectories"] = files
    summary["metric"] = (f"max_t |f0 - f|_H^{cfg.controls.norm_index:g} + "
                         f"max_t |Phi0 - Phi|_H^{cfg.controls.norm_index - 1:g}")
    report.write_json(out / "sweep.json", summary)
    report.plot_sweep(out / "sweep.png", rep.mu_plus, rep.errors, rep.slope)
    for m, e in zip(rep.mu_plus, rep.errors):
        console(f"mu_plus = {m:g}: E = {e:.6e}")
    console("fitted slope: " + ("n/a (need two runs)" if rep.slope is None else f"{rep.slope:.4f}"))
    return EXIT_OK


def cmd_fields(args, console) -> int:
    cfg = _config(args)
    if cfg.points is None:
        raise ConfigError("missing key 'points' (or 'point_grid')")
    out = Path(args.out)
    grid, params = cfg.grid, cfg.params
    f = cfg.initial_profile()
    ops = OperatorSet(grid, f)
    try:
        # one-phase density of the stress problem at the configured state
        beta, _ = solve_density(ops, 0.5, 1.0, params.sigma * ops.geometry.g)
    except NearSingularError as exc:
        return _fail(out, exc, console)
    rows = []
    for x in cfg.points:
        row = {"x1": x[0], "x2": x[1], "status": "ok"}
        try:
            check_points(grid, f, x[None, :])
        except NearBoundaryError:
            row["status"] = "rejected_near_interface"
            rows.append(row)
            continue
        v, p = stokes_fields(grid, f, beta, x[None, :], params.mu)
        row.update(v1=v[0, 0], v2=v[0, 1], p=p[0])
        try:
            row["residual"] = interior_stokes_residual(grid, f, beta, x, params.mu, cfg.fd_step)
        except NearBoundaryError:
            row["status"] = "residual_stencil_near_interface"
        rows.append(row)
    report.write_fields_csv(out / "fields.csv", rows)
    report.plot_fields(out / "fields.png", grid, f, rows)
    res = [r["residual"] for r in rows if r.get("residual") is not None]
    report.write_json(out / "fields_summary.json", {
        "config": cfg.describe(),
        "points": len(rows),
        "rejected": sum(r["status"] != "ok" for r in rows),
        "max_residual": max(res) if res else None,
        "phi_max": float(np.max(np.abs(phi(grid, params, f, ops=ops)))),
    })
    console(f"{len(rows)} points, {sum(r['status'] != 'ok' for r in rows)} rejected, "
            f"max interior residual {max(res) if res else float('nan'):.3e}; "
            f"results in {out / 'fields.csv'}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep,
            "fields": cmd_fields}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="capstokes",
        description="Capillary Stokes interface solver: runs, identity checks, "
                    "viscosity sweeps and bulk field sampling.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="DIR", default="capstokes-out", help="output directory")
    p.add_argument("--suite", metavar="NAME", default="all", choices=SUITES,
                   help="identity suite for 'verify': " + ", ".join(SUITES))
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    console = _Console(args.quiet)
    try:
        return COMMANDS[args.command](args, console)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        # grid/parameter validation and CAPSTOKES_THREADS parsing
        _error(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
