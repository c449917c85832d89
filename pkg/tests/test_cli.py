import json

import pytest

from src.cli import EXIT_OK, EXIT_USAGE, build_parser, main, replay_metrics
from src.config import SCENARIOS_DIR
from src.sim.runner import TRAJECTORY_COLUMNS
from src.utils.artifacts import load_csv, load_json, load_jsonl, save_csv


def _write_scenario(tmp_path, robots: list[dict], duration: float=4.0) -> str:
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({
        "name": "tiny",
        "environment": "open_field.json",
        "method": "PT",
        "planner": "manual",
        "spawn": {"model": "fixed-list", "robots": robots},
        "params": {"duration": duration},
        "seed": 9,
    }), encoding="utf-8")
    return str(path)

TWO_ROBOTS = [
    {"start": [10, 50], "goal": [40, 50]},
    {"start": [40, 60], "goal": [10, 60]},
]


def test_validate_shipped_scenario():
    assert main(["validate", str(SCENARIOS_DIR / "junction_pt.json")]) == EXIT_OK


def test_malformed_scenario_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json", encoding="utf-8")

    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == EXIT_USAGE
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_empty_gamma_list_rejected_by_parser():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["sweep", "x.json", "--gammas", ""])
    assert exc.value.code == 2


def test_bad_thread_count_rejected_by_parser():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "x.json", "--threads", "0"])


def test_run_writes_outputs_and_is_reproducible(tmp_path):
    scenario = _write_scenario(tmp_path, TWO_ROBOTS)
    first, second = tmp_path / "a", tmp_path / "b"

    assert main(["run", scenario, "--out", str(first), "--format", "csv", "--threads", "1"]) == EXIT_OK
    assert main(["run", scenario, "--out", str(second), "--threads", "4"]) == EXIT_OK

    for name in ("record.json", "paths.json", "trajectories.csv", "record.csv"):
        assert (first / name).exists()
    assert not (second / "record.csv").exists()
    assert (first / "record.json").read_bytes() == (second / "record.json").read_bytes()

    record = load_json(first / "record.json")
    assert record["seed"] == 9
    assert record["method"] == "PT"
    assert record["params"]["params"]["robot_radius"] == 2.0

    rows = load_csv(first / "trajectories.csv")
    assert len(rows) == 2 * 40
    assert list(rows[0]) == TRAJECTORY_COLUMNS
    assert {row["sampled"] for row in rows} == {"1"}
    assert set(load_json(first / "paths.json")) == {"0", "1"}


def test_seed_flag_overrides_scenario_seed(tmp_path):
    scenario = _write_scenario(tmp_path, [])
    out = tmp_path / "run"

    assert main(["run", scenario, "--out", str(out), "--seed", "77"]) == EXIT_OK
    assert load_json(out / "record.json")["seed"] == 77


def test_replay_metrics_matches_record(tmp_path):
    scenario = _write_scenario(tmp_path, TWO_ROBOTS)
    out = tmp_path / "run"
    assert main(["run", scenario, "--out", str(out)]) == EXIT_OK

    result = replay_metrics(out)
    record = load_json(out / "record.json")

    assert result["matches_record"] is True
    assert result["inter_robot_collisions"] == record["inter_robot_collisions"]
    assert result["ppd_rmse_mean"] == pytest.approx(record["ppd_rmse_mean"])

    assert main(["replay-metrics", str(out)]) == EXIT_OK
    assert (out / "replay.json").exists()


def _append_frozen_rows(run_dir, *, sampled: str) -> None:
    """Rows of a robot parked far off its path, as written after a fault."""
    path = run_dir / "trajectories.csv"
    rows = load_csv(path)
    t_last = max(float(row["t"]) for row in rows)
    for k in range(1, 6):
        rows.append({"t": round(t_last + 0.1 * k, 9), "robot_id": 0, "x": 10.0, "y": 90.0, "sampled": sampled})
    save_csv(path, TRAJECTORY_COLUMNS, rows)


def test_replay_metrics_ignores_unsampled_rows(tmp_path):
    scenario = _write_scenario(tmp_path, TWO_ROBOTS)
    out = tmp_path / "run"
    assert main(["run", scenario, "--out", str(out)]) == EXIT_OK

    _append_frozen_rows(out, sampled="0")
    assert replay_metrics(out)["matches_record"] is True

    _append_frozen_rows(out, sampled="1")
    assert replay_metrics(out)["matches_record"] is False


def test_replay_metrics_on_missing_dir_is_usage_error(tmp_path):
    assert main(["replay-metrics", str(tmp_path / "nope")]) == EXIT_USAGE


def test_sweep_writes_records_and_aggregate(tmp_path):
    scenario = _write_scenario(tmp_path, [{"start": [10, 50], "goal": [30, 50]}], duration=2.0)
    out = tmp_path / "sweep"

    code = main(["sweep", scenario, "--gammas", "0,0.5", "--runs", "2", "--out", str(out), "--format", "csv"])
    assert code == EXIT_OK

    records = load_jsonl(out / "records.jsonl")
    assert len(records) == 4
    assert len({r["seed"] for r in records}) == 4
    assert len(load_csv(out / "records.csv")) == 4

    aggregate = load_csv(out / "aggregate.csv")
    assert [float(row["gamma"]) for row in aggregate] == [0.0, 0.5]
    assert all(int(row["runs"]) == 2 for row in aggregate)

    assert (out / "gamma0.50_run1" / "record.csv").exists()


def test_sweep_rejects_zero_runs(tmp_path):
    scenario = _write_scenario(tmp_path, [])
    assert main(["sweep", scenario, "--runs", "0", "--out", str(tmp_path / "s")]) == EXIT_USAGE
