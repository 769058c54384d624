"""Command-line entry point.

Subcommands: ``run``, ``verify``, ``stationary``, ``sweep``.  Exit codes:
0 success, 1 configuration error, 2 monitor failure, 3 solver error.
The output directory can be overridden with ``BAROGALERKIN_OUTPUT_DIR``
(an explicit ``--output-dir`` flag wins over both).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientResolution, InvalidInitialData, MonitorViolation, SolverError
from .model import ModelParams, stationary_xi

# invalid input, reported with exit code 1
_INPUT_ERRORS = (ConfigError, InvalidInitialData, InsufficientResolution)

log = logging.getLogger("barogalerkin")

EXIT_OK, EXIT_CONFIG, EXIT_MONITOR, EXIT_SOLVER = 0, 1, 2, 3
OUTPUT_ENV = "BAROGALERKIN_OUTPUT_DIR"


def _output_dir(cfg, flag):
    return Path(flag or os.environ.get(OUTPUT_ENV) or cfg.directory)


def _monitor_summary(traj) -> dict:
    mons = traj.reports.get("monitors", {})
    return {
        name: {"passed": m.passed, "hard": m.hard, "worst": m.worst, "t_worst": m.t_worst}
        for name, m in sorted(mons.items())
    }


def execute_run(cfg, out_dir: Path) -> tuple[int, dict]:
    """Run one configuration and write its outputs; returns ``(exit code, summary)``."""
    from . import io
    from .galerkin import run

    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"status": "ok"}
    try:
        init = cfg.initial_data()
        traj = run(
            init,
            cfg.params,
            cfg.t_end,
            output_times=cfg.output_times(),
            dt=cfg.dt,
            monitors=cfg.monitors,
            mutations=cfg.mutations,
        )
        code = EXIT_OK
    except _INPUT_ERRORS:
        raise
    except MonitorViolation as exc:
        traj = exc.trajectory
        summary = {"status": "monitor_failure", "error": str(exc)}
        code = EXIT_MONITOR
        if traj is None or not len(traj):
            return code, summary
    except (SolverError, ValueError) as exc:
        summary = {"status": "solver_error", "error": f"{type(exc).__name__}: {exc}"}
        log.error("solver error: %s", exc)
        return EXIT_SOLVER, summary

    files = []
    if "csv" in cfg.formats:
        files.append(io.write_trajectory_csv(out_dir / "trajectory.csv", traj))
    if "json" in cfg.formats:
        files.append(io.write_records_json(out_dir / "trajectory.json", traj))
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    wanted = np.asarray(cfg.snapshot_times or [traj.times[0], traj.times[-1]], float)
    for i, state in enumerate(traj.states):
        if np.any(np.isclose(state.t, wanted, rtol=0, atol=1e-12)):
            files.append(io.write_snapshot(snap_dir / f"snapshot_{i:05d}_t{state.t:.6f}.csv", state))
    last = traj.records[-1]
    summary.update(
        final_energy=last.total_energy,
        max_xi=float(np.max(traj.column("xi_max"))),
        min_xi=float(np.min(traj.column("xi_min"))),
        dissipation_cum=last.dissipation_cum,
        boundary_substeps=traj.final.pi_substeps,
        steps=traj.n_steps,
        monitors_ok=all(m.passed for m in traj.reports.get("monitors", {}).values()),
    )
    io.write_manifest(
        out_dir / "manifest.json",
        cfg.source,
        files,
        _monitor_summary(traj),
        {"summary": summary, "initial_data": init.name},
    )
    return code, summary


def cmd_run(args) -> int:
    from .config import load_config

    cfg = load_config(args.config)
    out = _output_dir(cfg, args.output_dir)
    code, summary = execute_run(cfg, out)
    print(f"{summary['status']}: outputs in {out}")
    if "error" in summary:
        print(summary["error"], file=sys.stderr)
    return code


def cmd_verify(args) -> int:
    from .verify import format_table, run_suite, smallness_status

    params = None
    if args.config:
        from .config import load_config

        params = load_config(args.config).params
    only = {int(x) for x in args.only.split(",")} if args.only else None
    results, suite = run_suite(params, frozenset(args.mutation or ()), only)
    print(format_table(results))
    runs = suite.completed()
    if runs:
        xi_plus = max(float(np.max(tr.column("xi_max"))) for tr in runs.values())
        print("smallness:", smallness_status(suite.params, xi_plus))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_MONITOR


def cmd_stationary(args) -> int:
    from .boundary import pi_bounds, relaxation_rate

    try:
        params = ModelParams(a=args.a, gamma=args.gamma, mu=args.mu, P=args.P)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    xs = stationary_xi(params)
    print(f"xi*        = {xs:.15g}")
    print(f"p(1/xi*)   = {params.a * xs ** (-params.gamma):.15g} (P = {params.P:g})")
    print(f"relaxation = {relaxation_rate(params):.15g}")
    if args.pi0 is not None:
        if not args.pi0 > 0:
            print("error: pi0 must be positive", file=sys.stderr)
            return EXIT_CONFIG
        lo, hi = pi_bounds(args.pi0, params)
        print(f"bracket    = ({lo:.15g}, {hi:.15g})")
    xi_plus = args.xi_plus if args.xi_plus is not None else xs
    if not xi_plus > 0:
        print("error: xi_plus must be positive", file=sys.stderr)
        return EXIT_CONFIG
    thr = params.a * params.gamma / xi_plus ** (params.gamma + 1.0)
    print(f"mu bound   = {thr:.15g} at xi_+ = {xi_plus:g} ({'holds' if params.mu <= thr else 'fails'} for mu = {params.mu:g})")
    return EXIT_OK


SWEEP_AXES = {"mu": float, "N": int, "R": int}
SWEEP_COLUMNS = (
    "value",
    "final_energy",
    "energy_change",
    "max_xi",
    "min_xi",
    "dissipation_cum",
    "boundary_substeps",
    "status",
    "exit_code",
)


def _sweep_one(job):
    cfg, out_dir = job
    try:
        code, summary = execute_run(cfg, out_dir)
    except _INPUT_ERRORS as exc:
        code, summary = EXIT_CONFIG, {"status": "config_error", "error": str(exc)}
    except Exception as exc:  # a crashed run must not stop the sweep
        code, summary = EXIT_SOLVER, {"status": "solver_error", "error": repr(exc)}
    return code, summary


def cmd_sweep(args) -> int:
    from .config import load_config

    cfg = load_config(args.config)
    cast = SWEEP_AXES[args.axis]
    values = [cast(v) for v in args.values.split(",")]
    root = _output_dir(cfg, args.output_dir) / f"sweep_{args.axis}"
    jobs = []
    for v in values:
        try:
            jobs.append((cfg.with_overrides(**{args.axis: v}), root / f"{args.axis}_{v}"))
        except ConfigError as exc:
            jobs.append((exc, None))
    runnable = [j for j in jobs if j[1] is not None]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        outcomes = iter(list(pool.map(_sweep_one, runnable)))
    rows = []
    for v, (cfg_v, out) in zip(values, jobs):
        if out is None:
            code, summary = EXIT_CONFIG, {"status": "config_error", "error": str(cfg_v)}
        else:
            code, summary = next(outcomes)
        row = {"value": v, "exit_code": code, **summary}
        # |final energy - previous value's final energy|: a self-convergence column for N sweeps
        prev = rows[-1].get("final_energy") if rows else None
        if prev is not None and "final_energy" in row:
            row["energy_change"] = abs(row["final_energy"] - prev)
        rows.append(row)
        print(f"{args.axis}={v}: {summary['status']}")
    root.mkdir(parents=True, exist_ok=True)
    with (root / "summary.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, SWEEP_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"summary written to {root / 'summary.csv'}")
    return max((r["exit_code"] for r in rows), default=EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barogalerkin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration and write outputs")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("config", nargs="?", help="optional config whose model block replaces the suite defaults")
    p.add_argument("--only", help="comma separated criterion numbers")
    p.add_argument("--mutation", action="append", choices=["flip_pressure", "no_truncation"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stationary", help="equilibrium, bracket and smallness threshold")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--P", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=5.0)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--pi0", type=float)
    p.add_argument("--xi-plus", type=float)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("sweep", help="independent runs over one parameter")
    p.add_argument("config")
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma separated values")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
