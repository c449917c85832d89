"""
Command-line surface: run | sweep | validate | replay-metrics.

Exit codes: 0 success, 1 simulation fault (record flagged incomplete), 2 usage or
parse error.
"""
from __future__ import annotations
from pathlib import Path
from typing import Any, Sequence

import argparse
import os
import sys

import numpy as np

from src.config import PROJECT_ROOT, RUNS_DIR, SWEEPS_DIR, SWEEP_CONFIG
from src.errors import EnvironmentFileError, ScenarioFileError
from src.env.environment import load_environment
from src.metrics.collisions import replay_collisions
from src.metrics.ppd import ppd_rmse
from src.metrics.record import AGGREGATE_COLUMNS, CSV_COLUMNS, MetricsRecord, aggregate_by_gamma, rmse_summary
from src.metrics.reporting import summarize, summarize_aggregates
from src.sim.runner import TRAJECTORY_COLUMNS, SimulationOutput, simulate
from src.sim.scenario import ScenarioSpec, load_scenario
from src.sim.sweep import iter_sweep, validate_gammas
from src.startup_checks import check_output_dir_ready, check_run_dir_ready, ensure_project_dirs
from src.utils.artifacts import load_csv, load_json, save_csv, save_json, save_jsonl
from src.utils.console import info, error

EXIT_OK = 0
EXIT_FAULT = 1
EXIT_USAGE = 2

def _threads(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"--threads must be >= 1, got {n}")
    return n

def _gammas(value: str) -> list[float]:
    parts = [p for p in value.replace(" ", "").split(",") if p]
    try:
        return validate_gammas([float(p) for p in parts])
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gbp_sim", description="GBP multi-robot path-tracking simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def _common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", help="Path to a scenario JSON file")
        p.add_argument("--out", default=None, help="Output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="Seed override (beats the scenario seed and $GBP_SIM_SEED)")
        p.add_argument("--format", choices=["json", "csv"], default="json", help="Record format; csv also writes JSON")
        p.add_argument("--simplify", action="store_true", default=None, help="Shortcut WT global paths")
        p.add_argument("--ppd-literal", action="store_true", default=None, help="Use the literal double-squared PPD formula")
        p.add_argument("--threads", type=_threads, default=os.cpu_count() or 1, help="Worker threads (default: all cores)")
        p.add_argument("--progress", action="store_true", help="Show a progress bar")

    run = sub.add_parser("run", help="Run one scenario")
    _common(run)

    sweep = sub.add_parser("sweep", help="Communication-failure sweep")
    _common(sweep)
    sweep.add_argument(
        "--gammas",
        type=_gammas,
        default=list(SWEEP_CONFIG["gammas"]),
        help="Comma-separated failure probabilities, e.g. 0,0.3,0.7"
    )
    sweep.add_argument("--runs", type=int, default=int(SWEEP_CONFIG["runs"]), help="Runs per gamma")

    validate = sub.add_parser("validate", help="Parse a scenario and its environment")
    validate.add_argument("scenario", help="Path to a scenario JSON file")

    replay = sub.add_parser("replay-metrics", help="Recompute metrics from a run directory")
    replay.add_argument("run_dir", help="Directory written by `run`")

    return ap


def _load_spec(args: argparse.Namespace) -> ScenarioSpec:
    spec = load_scenario(args.scenario)
    return spec.with_overrides(
        seed=args.seed,
        simplify=args.simplify,
        ppd_literal=args.ppd_literal
    )

def write_run_outputs(out_dir: Path, output: SimulationOutput, *, fmt: str="json") -> list[Path]:
    record = output.record
    written = [
        save_json(out_dir / "record.json", record.to_dict()),
        save_json(out_dir / "paths.json", output.paths),
        save_csv(out_dir / "trajectories.csv", TRAJECTORY_COLUMNS, output.trajectories),
    ]
    if fmt == "csv":
        written.append(save_csv(out_dir / "record.csv", CSV_COLUMNS, [record.csv_row()]))
    return written

def cmd_run(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    seed = spec.resolved_seed()
    out_dir = check_output_dir_ready(
        args.out or RUNS_DIR / f"{spec.name}_seed{seed}",
        hint="Pass --out with a directory path."
    )

    output = simulate(spec, threads=args.threads, progress=args.progress)
    for path in write_run_outputs(out_dir, output, fmt=args.format):
        info("cli", f"Wrote: {path}")

    print(summarize([output.record]), end="")

    if output.record.incomplete:
        error("cli", f"Run incomplete: {output.record.error}")
        return EXIT_FAULT
    return EXIT_OK

def cmd_sweep(args: argparse.Namespace) -> int:
    if args.runs < 1:
        error("cli", f"--runs must be >= 1, got {args.runs}")
        return EXIT_USAGE

    spec = _load_spec(args)
    out_dir = check_output_dir_ready(
        args.out or SWEEPS_DIR / f"{spec.name}_seed{spec.resolved_seed()}",
        hint="Pass --out with a directory path."
    )

    records: list[MetricsRecord] = []
    for run in iter_sweep(spec, args.gammas, args.runs, threads=args.threads, progress=args.progress):
        write_run_outputs(out_dir / run.label, run.output, fmt=args.format)
        records.append(run.record)

    aggregates = aggregate_by_gamma(records)
    written = [
        save_jsonl(out_dir / "records.jsonl", [r.to_dict() for r in records]),
        save_csv(out_dir / "records.csv", CSV_COLUMNS, [r.csv_row() for r in records]),
        save_csv(out_dir / "aggregate.csv", AGGREGATE_COLUMNS, aggregates),
    ]
    for path in written:
        info("cli", f"Wrote: {path}")

    print(summarize_aggregates(aggregates), end="")

    return EXIT_OK if any(not r.incomplete for r in records) else EXIT_FAULT

def cmd_validate(args: argparse.Namespace) -> int:
    spec = load_scenario(args.scenario)
    env = load_environment(spec.environment, cell_size=spec.params.cell_size)

    lanes = 0 if env.lane_graph is None else len(env.lane_graph)
    info(
        "cli",
        f"{spec.name}: {spec.method.value}/{spec.planner.value}, env={env.name} "
        f"({len(env.obstacles)} obstacles, {lanes} lane nodes, sites={env.site_names}), "
        f"spawn={spec.spawn.model.value}"
    )
    return EXIT_OK

def _resolve_recorded_path(value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else PROJECT_ROOT / p

def _close(a: float | None, b: float | None, tol: float=1e-9) -> bool:
    if a is None or b is None:
        return a is b
    return abs(a - b) <= tol * max(1.0, abs(b))

def replay_metrics(run_dir: Path | str) -> dict[str, Any]:
    """
    Recount collisions and PPD from trajectories.csv / paths.json and compare them
    with record.json. Every row is a collision frame; only rows flagged `sampled` are
    PPD samples (frozen rows of faulted robots are not).
    """
    run_dir = check_run_dir_ready(run_dir)
    record = MetricsRecord.from_dict(load_json(run_dir / "record.json"))
    paths = load_json(run_dir / "paths.json")
    rows = load_csv(run_dir / "trajectories.csv")

    params = record.params["params"]
    env = load_environment(_resolve_recorded_path(record.params["environment"]), cell_size=params["cell_size"])

    frames: dict[float, dict[int, np.ndarray]] = {}
    samples: dict[int, list[np.ndarray]] = {}
    for row in rows:
        t = float(row["t"])
        rid = int(row["robot_id"])
        pos = np.array([float(row["x"]), float(row["y"])])
        frames.setdefault(t, {})[rid] = pos
        if row.get("sampled", "1") == "1":
            samples.setdefault(rid, []).append(pos)

    inter_robot, environment = replay_collisions(
        [frames[t] for t in sorted(frames)],
        float(params["robot_radius"]),
        env
    )

    literal = bool(record.params.get("ppd_literal", False))
    per_robot = {
        rid: ppd_rmse(np.stack(pts), np.asarray(paths[str(rid)]["waypoints"]), literal=literal)
        for rid, pts in sorted(samples.items())
    }
    mean, std = rmse_summary(per_robot.values())

    return {
        "inter_robot_collisions": inter_robot,
        "environment_collisions": environment,
        "ppd_rmse_mean": mean,
        "ppd_rmse_std": std,
        "matches_record": (
            inter_robot == record.inter_robot_collisions
            and environment == record.environment_collisions
            and _close(mean, record.ppd_rmse_mean)
        ),
    }

def cmd_replay_metrics(args: argparse.Namespace) -> int:
    result = replay_metrics(args.run_dir)
    path = save_json(Path(args.run_dir) / "replay.json", result)
    info("cli", f"Wrote: {path}")

    if not result["matches_record"]:
        error("cli", "Replayed metrics differ from record.json")
        return EXIT_FAULT
    return EXIT_OK


def main(argv: Sequence[str] | None=None) -> int:
    args = build_parser().parse_args(argv)
    ensure_project_dirs()

    try:
        match args.command:
            case "run":
                return cmd_run(args)
            case "sweep":
                return cmd_sweep(args)
            case "validate":
                return cmd_validate(args)
            case "replay-metrics":
                return cmd_replay_metrics(args)
    except (ScenarioFileError, EnvironmentFileError) as e:
        error("cli", str(e))
        return EXIT_USAGE
    except (ValueError, RuntimeError) as e:
        error("cli", str(e))
        return EXIT_USAGE

    return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
