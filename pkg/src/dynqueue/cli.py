"""Command-line front end: experiment orchestration and result persistence.

Subcommands: ``equilibrium``, ``simulate``, ``sweep``, ``static-oracle``,
``certify``.  Every file-writing command puts its outputs under one
directory and writes ``manifest.json`` last, so the presence of a
manifest marks a complete run.  All numeric output uses 17 significant
digits; the core is deterministic, so rerunning a config reproduces every
derived file byte for byte.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .config import RunConfig, build_run_config, load_run_config
from .equilibrium import (
    CriticalPoint,
    critical_rate,
    sustainable_service_time_grid,
)
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleError,
    ValidationError,
)
from .simulator import SimConfig, Trajectory, run
from .stability import classify, compute_constants, queue_upper_bound
from .static_oracle import StaticProblem, verify_bound

CURVES_GRID_POINTS = 1001

SWEEP_CSV_COLUMNS = ("lambda", "verdict", "max_queue", "growth_rate")
CERTIFY_CSV_COLUMNS = (
    "lambda",
    "verdict",
    "max_queue",
    "queue_bound",
    "growth_rate",
)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _print_report(pairs) -> None:
    for key, value in pairs:
        print(f"{key} = {_fmt(value)}")


def _write_report(path: Path, pairs) -> None:
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {_fmt(value)}\n")


def _write_manifest(out_dir: Path, command: str, cfg: RunConfig, derived: dict,
                    runs: list, files: list[str]) -> None:
    manifest = {
        "artifact": "dynqueue",
        "version": __version__,
        "backend": backend_name(),
        "command": command,
        "config": cfg.raw,
        "derived": derived,
        "runs": runs,
        "files": sorted(files),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _critical_summary(critical: CriticalPoint) -> dict:
    return {
        "lambda_eq_max": critical.lambda_eq_max,
        "x_th": critical.x_th,
        "degenerate": critical.degenerate,
        "gap_at_min": critical.gap_at_min,
    }


def _simulate_one(
    cfg: RunConfig, lam: float, critical: CriticalPoint, out_dir: Path | None
) -> tuple[Trajectory, dict, list[str]]:
    policy = cfg.policy(critical)
    sim = SimConfig(
        lam=lam,
        tau=cfg.tau,
        x0=cfg.sim_x0,
        n0=cfg.sim_n0,
        horizon_tasks=cfg.sim_horizon,
        record_granularity=cfg.sim_record,
    )
    trajectory = run(sim, cfg.profile, policy)
    verdict = classify(trajectory, cfg.profile, cfg.tau, lam, critical)
    row = {
        "lambda": lam,
        "verdict": verdict.verdict,
        "max_queue": trajectory.max_queue,
        "growth_rate": verdict.evidence.get("growth_rate"),
        "policy_kind": policy.kind,
        "policy_threshold": policy.threshold,
    }
    files: list[str] = []
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        traj_path = out_dir / "trajectory.csv"
        trajectory.to_csv(traj_path)
        files.append(str(traj_path))
        summary_pairs = sorted(trajectory.summary().items())
        summary_path = out_dir / "summary.txt"
        _write_report(summary_path, summary_pairs)
        files.append(str(summary_path))
    return trajectory, row, files


def cmd_equilibrium(args) -> int:
    cfg = _load(args)
    critical = critical_rate(cfg.profile, cfg.tau)
    pairs = list(_critical_summary(critical).items())
    _print_report(pairs)
    if critical.degenerate:
        print("warning: degenerate critical point (threshold at 1); "
              "certificate operations will refuse this profile", file=sys.stderr)
    files: list[str] = []
    out_dir = _out_dir(args, cfg)
    if out_dir is None:
        return 0
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "equilibrium.txt"
    _write_report(report_path, pairs)
    files.append(str(report_path))
    if args.curves:
        lam = (
            cfg.sim_lambda.resolve(critical)
            if cfg.sim_lambda is not None
            else critical.lambda_eq_max
        )
        xs = np.linspace(0.0, 1.0, CURVES_GRID_POINTS)
        ss = np.array([cfg.profile.value(float(x)) for x in xs])
        rs = sustainable_service_time_grid(xs, cfg.tau, lam)
        curves_path = out_dir / "curves.csv"
        with open(curves_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "s", "r"])
            for x, s, r in zip(xs, ss, rs):
                writer.writerow([f"{x:.17g}", f"{s:.17g}", f"{r:.17g}"])
        files.append(str(curves_path))
    _write_manifest(out_dir, "equilibrium", cfg, _critical_summary(critical), [], files)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.sim_lambda is None:
        raise ValidationError("simulate needs sim.lambda in the config")
    critical = critical_rate(cfg.profile, cfg.tau)
    lam = cfg.sim_lambda.resolve(critical)
    out_dir = _out_dir(args, cfg)
    _, row, files = _simulate_one(cfg, lam, critical, out_dir)
    _print_report(sorted(row.items()))
    if out_dir is not None:
        derived = _critical_summary(critical)
        derived["resolved_lambda"] = lam
        derived["policy_threshold"] = row["policy_threshold"]
        _write_manifest(out_dir, "simulate", cfg, derived, [row], files)
    return 0


def _sweep_worker(payload) -> tuple[dict, list[str]]:
    raw, lam, critical_fields, subdir = payload
    cfg = build_run_config(raw)
    critical = CriticalPoint(**critical_fields)
    _, row, files = _simulate_one(cfg, lam, critical, Path(subdir))
    return row, files


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if not cfg.sweep_lambdas:
        raise ValidationError("sweep needs a nonempty sweep.lambdas list")
    out_dir = _out_dir(args, cfg)
    if out_dir is None:
        raise ValidationError("sweep needs an output directory (--out or out.dir)")
    out_dir.mkdir(parents=True, exist_ok=True)
    critical = critical_rate(cfg.profile, cfg.tau)
    lams = sorted(spec.resolve(critical) for spec in cfg.sweep_lambdas)
    critical_fields = asdict(critical)
    payloads = [
        (cfg.raw, lam, critical_fields, str(out_dir / f"lam_{i:03d}"))
        for i, lam in enumerate(lams)
    ]
    workers = args.workers or cfg.workers
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]

    files: list[str] = []
    rows = []
    for row, run_files in results:
        rows.append(row)
        files.extend(run_files)
    rows.sort(key=lambda r: r["lambda"])

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in rows:
            growth = row["growth_rate"]
            writer.writerow([
                f"{row['lambda']:.17g}",
                row["verdict"],
                row["max_queue"],
                "" if growth is None else f"{growth:.17g}",
            ])
    files.append(str(sweep_path))
    for row in rows:
        print(f"{row['lambda']:.17g},{row['verdict']},{row['max_queue']},"
              + ("" if row["growth_rate"] is None else f"{row['growth_rate']:.17g}"))
    derived = _critical_summary(critical)
    derived["resolved_lambdas"] = lams
    _write_manifest(out_dir, "sweep", cfg, derived, rows, files)
    return 0


def cmd_static_oracle(args) -> int:
    cfg = _load(args)
    critical = critical_rate(cfg.profile, cfg.tau)
    n = args.n if args.n is not None else cfg.static_n
    if args.x is not None:
        x = args.x
    elif cfg.static_x is not None:
        x = cfg.static_x
    else:
        if critical.degenerate:
            raise ValidationError(
                "static.x = x_th needs a non-degenerate critical point; "
                "pass an explicit boundary state"
            )
        x = critical.x_th
    grid_step = args.grid_step if args.grid_step is not None else cfg.static_grid_step
    idle_cap = args.idle_cap if args.idle_cap is not None else cfg.static_idle_cap
    problem = StaticProblem(x=x, tau=cfg.tau, n=n)
    check = verify_bound(problem, cfg.profile, critical, grid_step, idle_cap)
    pairs = [
        ("n", n),
        ("x", x),
        ("grid_step", grid_step if grid_step is not None else 0.01 * cfg.tau),
        ("idle_cap", idle_cap if idle_cap is not None else 3.0 * cfg.tau),
        ("best_time", check.best_time),
        ("target", check.target),
        ("margin", check.margin),
        ("tol", check.tol),
        ("passed", check.passed),
        ("best_schedule", ",".join(f"{d:.17g}" for d in check.schedule.idle_before)),
    ]
    _print_report(pairs)
    out_dir = _out_dir(args, cfg)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "static_oracle.txt"
        _write_report(report_path, pairs)
        _write_manifest(
            out_dir, "static-oracle", cfg, _critical_summary(critical), [],
            [str(report_path)],
        )
    return 0


def cmd_certify(args) -> int:
    cfg = _load(args)
    if cfg.sim_lambda is None:
        raise ValidationError("certify needs sim.lambda in the config")
    critical = critical_rate(cfg.profile, cfg.tau)
    # refuses degenerate critical points before any simulation runs
    constants = compute_constants(cfg.profile, cfg.tau, critical)
    lam = cfg.sim_lambda.resolve(critical)
    out_dir = _out_dir(args, cfg)
    trajectory, row, files = _simulate_one(cfg, lam, critical, out_dir)
    verdict = classify(trajectory, cfg.profile, cfg.tau, lam, critical)

    pairs = list(_critical_summary(critical).items())
    pairs.extend(sorted(asdict(constants).items()))
    if lam <= critical.lambda_eq_max:
        qb = queue_upper_bound(cfg.profile, cfg.tau, lam, critical,
                               cfg.sim_x0, cfg.sim_n0)
        pairs.extend(
            [
                ("queue_bound", qb.bound),
                ("queue_bound_n_t1", qb.n_t1),
                ("queue_bound_climb_increment", qb.climb_increment),
                ("queue_bound_idle_increment", qb.idle_increment),
            ]
        )
        row["queue_bound"] = qb.bound
    else:
        row["queue_bound"] = None
    pairs.append(("verdict", verdict.verdict))
    pairs.extend((f"evidence.{k}", v) for k, v in sorted(verdict.evidence.items()))
    _print_report(pairs)

    if out_dir is not None:
        report_path = out_dir / "certify.txt"
        _write_report(report_path, pairs)
        files.append(str(report_path))
        csv_path = out_dir / "certify.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CERTIFY_CSV_COLUMNS)
            growth = verdict.evidence.get("growth_rate")
            writer.writerow([
                f"{lam:.17g}",
                verdict.verdict,
                trajectory.max_queue,
                "" if row["queue_bound"] is None else row["queue_bound"],
                "" if growth is None else f"{growth:.17g}",
            ])
        files.append(str(csv_path))
        derived = _critical_summary(critical)
        derived["resolved_lambda"] = lam
        derived["constants"] = asdict(constants)
        _write_manifest(out_dir, "certify", cfg, derived, [row], files)
    return 0


def _load(args) -> RunConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if getattr(args, "lam", None) is not None:
        overrides["sim.lambda"] = args.lam
    return load_run_config(args.config, overrides)


def _out_dir(args, cfg: RunConfig) -> Path | None:
    if args.out is not None:
        return Path(args.out)
    if cfg.out_dir is not None:
        return Path(cfg.out_dir)
    return None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the key=value config file")
    p.add_argument("--out", default=None, help="output directory (overrides out.dir)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynqueue",
        description="dynamical queue analysis: equilibrium, simulation, certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibrium", help="critical rate and threshold")
    _add_common(p)
    p.add_argument("--curves", action="store_true",
                   help="also write an (x, S, W) curve table as CSV")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("simulate", help="run one simulation and classify it")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", default=None,
                   help="arrival rate, absolute or relative like 0.95x")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate a list of arrival rates")
    _add_common(p)
    p.add_argument("--workers", type=int, default=None,
                   help="concurrent runs (default: config workers)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("static-oracle", help="verify the static-batch lower bound")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="task count (<= 4)")
    p.add_argument("--x", type=float, default=None, help="boundary state in (0, 1)")
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--idle-cap", type=float, default=None)
    p.set_defaults(func=cmd_static_oracle)

    p = sub.add_parser("certify", help="stability certificates for one run")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", default=None,
                   help="arrival rate, absolute or relative like 0.95x")
    p.set_defaults(func=cmd_certify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
