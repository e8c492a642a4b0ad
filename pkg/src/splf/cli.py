"""Command line front end: ``splf run | converge | audit``.

Exit codes: 0 success, 1 audit tolerance failed, 2 invalid configuration
or regime, 3 numerical blow-up (partial output is still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import dump_config, load_config, resolved_items
from .diagnostics import (
    convergence_metrics,
    convergence_params,
    energy_residual_mean,
    energy_residual_pathwise,
    enstrophy_residual,
    enstrophy_residual_mean,
)
from .errors import BlowUpError, ConfigurationError, DomainError
from .integrator import DEFAULT_SUP_ALPHAS, simulate, simulate_levels, write_checkpoint
from .noise import derive_seed

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
CSV_SCHEMA_VERSION = 1

RUN_COLUMNS = ["t", "energy", "dissipation", "enstrophy", "martingale_increment"]
METRIC_NAMES = [f"sup_2_{a:g}" for a in DEFAULT_SUP_ALPHAS] + ["int_2_1plus_alpha", "int_ptilde_1"]
CONVERGE_COLUMNS = ["kind", "level", "path", "seed"] + [
    col for m in METRIC_NAMES for col in (m, f"{m}_q1", f"{m}_q3")
]
AUDIT_COLUMNS = ["kind", "path", "seed", "residual", "pathwise_residual", "mean", "stderr", "tolerance", "passed"]


def fmt(x):
    """Deterministic 17-significant-digit float text."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class CsvOut:
    """CSV writer with a provenance header of ``#`` comment lines."""

    def __init__(self, command, cfg, extras, columns, notes=()):
        self.buf = io.StringIO()
        self.buf.write(f"# splf {__version__} {command} schema={CSV_SCHEMA_VERSION}\n")
        for section, key, value in resolved_items(cfg, extras):
            self.buf.write(f"# {section}.{key} = {value}\n")
        for note in list(notes) + cfg.regime_notes():
            self.buf.write(f"# note: {note}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")
        self.writer.writerow(columns)

    def row(self, values):
        self.writer.writerow([fmt(v) for v in values])

    def comment(self, text):
        self.buf.write(f"# {text}\n")

    def save(self, path):
        data = self.buf.getvalue()
        if path is None or path == "-":
            sys.stdout.write(data)
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)


def _workers(arg, extras):
    w = arg if arg is not None else extras.get("workers", 0)
    return w if w and w > 0 else (os.cpu_count() or 1)


def _pool_map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _stride_rows(traj, stride):
    K = traj.n_steps
    keep = sorted(set(range(0, K + 1, stride)) | {0, K})
    inc = traj.martingale()
    rows, prev = [], 0
    for k in keep:
        rows.append([k * traj.config.dt, traj.energy[k], traj.dissipation[k], traj.enstrophy[k], inc[k] - inc[prev]])
        prev = k
    return rows


def cmd_run(args):
    cfg, extras = load_config(args.config)
    stride = args.stride if args.stride is not None else extras["stride"]
    if stride < 1:
        raise ConfigurationError("stride must be >= 1", "experiment.stride")
    extras = dict(extras, stride=stride)
    out = CsvOut("run", cfg, extras, RUN_COLUMNS)
    status = EXIT_OK
    try:
        traj = simulate(cfg)
    except BlowUpError as exc:
        traj, status = exc.trajectory, EXIT_BLOWUP
    for r in _stride_rows(traj, stride):
        out.row(r)
    if status == EXIT_BLOWUP:
        out.comment(f"status: blowup at step {traj.blowup_step}; output is partial")
    out.save(args.out)
    if args.checkpoint:
        write_checkpoint(args.checkpoint, cfg, traj.state(traj.n_steps), traj.n_steps)
    return status


def _converge_job(job):
    cfg, levels, reference, index = job
    runs = simulate_levels(cfg, levels, reference)
    params = convergence_params(cfg.d, cfg.p)
    return index, cfg.seed, {n: convergence_metrics(runs[n].z, params).as_row() for n in levels}


def _parse_levels(text):
    try:
        levels = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse levels {text!r}", "--levels") from None
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
        raise ConfigurationError("levels must be positive and strictly increasing", "--levels")
    return levels


def cmd_converge(args):
    cfg, extras = load_config(args.config)
    levels = _parse_levels(args.levels)
    seeds = args.seeds if args.seeds is not None else extras["paths"]
    if seeds < 1:
        raise ConfigurationError("need at least one seed", "--seeds")
    convergence_params(cfg.d, cfg.p)  # domain check before any work
    reference = levels[-1]
    compared = levels[:-1] or levels
    jobs = [(cfg.with_(seed=derive_seed(cfg.seed, i)), compared, reference, i) for i in range(seeds)]
    notes = [f"levels = {','.join(map(str, levels))}; reference = {reference}"]
    out = CsvOut("converge", cfg, dict(extras, paths=seeds), CONVERGE_COLUMNS, notes)
    status = EXIT_OK
    try:
        results = _pool_map(_converge_job, jobs, _workers(args.workers, extras))
    except BlowUpError as exc:
        out.comment(f"status: blowup at step {exc.step}; no rows written")
        out.save(args.out)
        return EXIT_BLOWUP
    for n in compared:
        for index, seed, rows in results:
            row = rows[n]
            vals = []
            for m in METRIC_NAMES:
                vals += [row[m], "", ""]
            out.row(["path", n, index, seed] + vals)
    for n in compared:
        vals = []
        for m in METRIC_NAMES:
            col = np.array([rows[n][m] for _, _, rows in results])
            vals += [np.median(col), np.quantile(col, 0.25), np.quantile(col, 0.75)]
        out.row(["median", n, "", ""] + vals)
    out.save(args.out)
    return status


def _audit_job(job):
    cfg, mode, index = job
    traj = simulate(cfg)
    if mode == "energy":
        return index, traj, energy_residual_pathwise(traj)
    return index, traj, enstrophy_residual(traj)


def cmd_audit(args):
    cfg, extras = load_config(args.config)
    paths = args.paths if args.paths is not None else extras["paths"]
    if paths < 2:
        raise ConfigurationError("audit needs at least two paths", "--paths")
    if args.mode == "enstrophy":
        if cfg.d != 2 or cfg.p != 2:
            raise DomainError(
                "enstrophy audit requires the 2D Navier-Stokes regime (d = 2, p = 2); "
                f"config has d={cfg.d}, p={cfg.p}"
            )
        cfg.covariance.require_trace_class(2)
    jobs = [(cfg.with_(seed=derive_seed(cfg.seed, i)), args.mode, i) for i in range(paths)]
    out = CsvOut(f"audit-{args.mode}", cfg, dict(extras, paths=paths), AUDIT_COLUMNS)
    try:
        results = _pool_map(_audit_job, jobs, _workers(args.workers, extras))
    except BlowUpError as exc:
        out.comment(f"status: blowup at step {exc.step}; no rows written")
        out.save(args.out)
        return EXIT_BLOWUP
    trajs = [traj for _, traj, _ in results]
    summary = energy_residual_mean(trajs) if args.mode == "energy" else enstrophy_residual_mean(trajs)
    for (index, traj, report), resid in zip(results, summary.residuals):
        out.row(["path", index, traj.seed, resid, report.residuals[0], "", "", "", ""])
    tol = summary.tolerance(cfg.dt, cfg.T)
    passed = abs(summary.mean) <= tol
    out.row(["summary", "", "", "", "", summary.mean, summary.stderr, tol, passed])
    out.save(args.out)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_resolve(args):
    sys.stdout.write(dump_config(*load_config(args.config)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="splf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"splf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="PATH", default=None, help="output CSV (default: stdout)")
        p.add_argument("--workers", type=int, default=None, metavar="W")

    p = sub.add_parser("run", help="simulate one path and write per-step diagnostics")
    common(p)
    p.add_argument("--stride", type=int, default=None, metavar="S")
    p.add_argument("--checkpoint", metavar="PATH", default=None, help="write the final state here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="coupled Galerkin convergence study")
    common(p)
    p.add_argument("--levels", required=True, metavar="a,b,c")
    p.add_argument("--seeds", type=int, default=None, metavar="K")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("audit", help="energy or enstrophy balance audit over an ensemble")
    common(p)
    p.add_argument("--paths", "--seeds", dest="paths", type=int, default=None, metavar="K")
    p.add_argument("--mode", choices=("energy", "enstrophy"), default="energy")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("resolve", help="print the config with every default filled in")
    p.add_argument("--config", required=True, metavar="PATH")
    p.set_defaults(func=cmd_resolve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or EXIT_OK
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
