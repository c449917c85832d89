import json
from collections import Counter

import numpy as np
import pytest

from src.config import ENVIRONMENTS_DIR, SCENARIOS_DIR, RANDOM_STATE, SEED_ENV_VAR
from src.errors import ScenarioFileError
from src.schemas import Method, PlannerKind, Schedule, SpawnModel
from src.env.environment import load_environment
from src.sim.params import SimParams
from src.sim.rng import Stream, stream
from src.sim import runner
from src.sim.runner import simulate
from src.sim.scenario import load_scenario, scenario_from_dict
from src.sim.spawners import SpawnEvent, SpawnQueue, junction_spawner
from src.sim.sweep import failure_sweep, sweep_seeds, validate_gammas


def _fixed(robots: list[dict], **extra) -> dict:
    payload = {
        "name": "fixed",
        "environment": "open_field.json",
        "method": "PT",
        "planner": "manual",
        "spawn": {"model": "fixed-list", "robots": robots},
        "seed": 3,
    }
    payload.update(extra)
    return payload


@pytest.mark.parametrize("path", sorted(SCENARIOS_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path):
    spec = load_scenario(path)
    assert spec.environment.exists()
    assert spec.name == path.stem


def test_junction_scenario_fields():
    spec = load_scenario(SCENARIOS_DIR / "junction_pt.json")

    assert spec.method == Method.PT
    assert spec.planner == PlannerKind.STRUCTURED
    assert spec.spawn.model == SpawnModel.JUNCTION_RANDOM_SIDES
    assert (spec.spawn.count, spec.spawn.rate) == (60, 4.0)
    assert spec.params.robot_radius == 1.0


def test_malformed_scenario_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "environment": "open_field.json",\n  "spawn": {,\n}\n', encoding="utf-8")

    with pytest.raises(ScenarioFileError) as exc:
        load_scenario(path)
    assert exc.value.line == 3
    assert str(path) in str(exc.value)


@pytest.mark.parametrize("payload", [
    {"environment": "open_field.json"},
    {"spawn": {"model": "fixed-list"}},
    _fixed([], method="XT"),
    _fixed([], planner="dijkstra"),
    _fixed([], extra_key=1),
    _fixed([], params={"warp": 9}),
    _fixed([], params={"gamma": 1.5}),
    _fixed([], seed="7"),
    _fixed([{"start": [0, 0]}]),
    _fixed([{"start": [0, 0], "goal": [1, 1], "time": -1}]),
    {"environment": "open_field.json", "planner": "manual", "spawn": {"model": "junction-random-sides"}},
    {"environment": "open_field.json", "spawn": {"model": "junction-random-sides", "rate": 0}},
])
def test_strict_scenario_rejections(payload):
    with pytest.raises(ValueError):
        scenario_from_dict(payload)


def test_environment_resolves_next_to_scenario_first(tmp_path):
    (tmp_path / "local.json").write_text(json.dumps({"bounds": [0, 0, 10, 10]}), encoding="utf-8")
    spec = scenario_from_dict(_fixed([], environment="local.json"), base_dir=tmp_path)
    assert spec.environment == (tmp_path / "local.json").resolve()

    spec = scenario_from_dict(_fixed([]), base_dir=tmp_path)
    assert spec.environment == (ENVIRONMENTS_DIR / "open_field.json").resolve()


def test_seed_precedence(monkeypatch):
    payload = _fixed([])
    del payload["seed"]
    spec = scenario_from_dict(payload)

    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert spec.resolved_seed() == RANDOM_STATE

    monkeypatch.setenv(SEED_ENV_VAR, "123")
    assert spec.resolved_seed() == 123

    assert scenario_from_dict(_fixed([])).resolved_seed() == 3
    assert spec.with_overrides(seed=5).resolved_seed() == 5

    monkeypatch.setenv(SEED_ENV_VAR, "abc")
    with pytest.raises(ValueError):
        spec.resolved_seed()


def test_sim_params_derived_defaults():
    p = SimParams.from_dict({})

    assert (p.robot_radius, p.comms_radius, p.target_speed) == (2.0, 20.0, 5.0)
    assert (p.r_switch, p.s_v, p.d_a, p.d_o) == (2.0, 5.0, 4.0, 2.0)
    assert p.dt == pytest.approx(5.0 / 9.0)
    assert p.schedule == Schedule.INTERLEAVED

    small = SimParams.from_dict({"robot_radius": 1.0, "d_a": 3.0})
    assert (small.r_switch, small.d_a, small.d_o) == (1.0, 3.0, 1.0)

    echoed = p.to_dict()
    assert echoed["schedule"] == "interleaved"
    assert echoed["dt"] == pytest.approx(5.0 / 9.0)


@pytest.mark.parametrize("overrides", [
    {"num_variables": 2},
    {"sigma_tracking": 0.0},
    {"damping": 0.9},
    {"schedule": "random"},
    {"internal_iters": -1},
])
def test_sim_params_rejections(overrides):
    with pytest.raises(ValueError):
        SimParams.from_dict(overrides)


def test_named_streams_are_independent():
    a = stream(7, Stream.COMMS).random(5)
    b = stream(7, Stream.COMMS).random(5)
    c = stream(7, Stream.SPAWN).random(5)
    d = stream(7, Stream.RRT_STAR, 1).random(5)
    e = stream(7, Stream.RRT_STAR, 2).random(5)

    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(d, e)


def test_junction_spawner_is_uniform_over_sides():
    env = load_environment(ENVIRONMENTS_DIR / "junction.json")
    events = junction_spawner(env.sites, stream(11, Stream.SPAWN), rate=4.0, count=4000)

    sides = Counter(e.site for e in events)
    assert set(sides) == {"east", "north", "south", "west"}
    assert all(900 <= n <= 1100 for n in sides.values())
    assert all(e.goal_site != e.site for e in events)
    assert events[8].time == pytest.approx(2.0)


def test_junction_spawner_needs_two_sites():
    env = load_environment(ENVIRONMENTS_DIR / "open_field.json")
    with pytest.raises(ValueError):
        junction_spawner(env.sites, stream(1, Stream.SPAWN), rate=1.0, count=3)


def _event(rid: int, t: float, start) -> SpawnEvent:
    return SpawnEvent(robot_id=rid, time=t, start=np.array(start, float), goal=np.array([90.0, 90.0]))


def test_spawn_queue_defers_until_start_is_free():
    queue = SpawnQueue([_event(0, 0.0, [10, 10]), _event(1, 0.0, [10, 10]), _event(2, 5.0, [50, 50])], clearance=4.5)

    assert [e.robot_id for e in queue.pop_ready(0.0, [])] == [0]
    assert queue.deferrals == 1

    assert queue.pop_ready(0.1, [np.array([11.0, 10.0])]) == []
    assert queue.deferrals == 2

    assert [e.robot_id for e in queue.pop_ready(0.2, [np.array([20.0, 10.0])])] == [1]
    assert len(queue) == 1
    assert [e.robot_id for e in queue.pop_ready(5.0, [])] == [2]


def test_empty_scenario_completes_immediately():
    output = simulate(scenario_from_dict(_fixed([])))
    record = output.record

    assert record.inter_robot_collisions == 0
    assert record.environment_collisions == 0
    assert record.ppd_rmse_mean is None
    assert record.ppd_rmse_std is None
    assert not record.incomplete
    assert record.diagnostics["robots_spawned"] == 0
    assert record.diagnostics["sim_time"] == 0.0
    assert output.trajectories == []


def test_straight_line_tracks_and_finishes():
    spec = scenario_from_dict(_fixed(
        [{"start": [10, 50], "goal": [60, 50]}],
        params={"duration": 30.0}
    ))
    record = simulate(spec).record

    assert not record.incomplete
    assert record.diagnostics["robots_finished"] == 1
    assert record.ppd_rmse_mean < 0.1
    assert record.environment_collisions == 0


CROSSING = [
    {"start": [10, 50], "goal": [50, 50]},
    {"start": [30, 30], "goal": [30, 70]},
]


def test_thread_count_does_not_change_results():
    spec = scenario_from_dict(_fixed(CROSSING, params={"duration": 5.0}))

    single = simulate(spec, threads=1)
    pooled = simulate(spec, threads=8)

    assert single.record.to_dict() == pooled.record.to_dict()
    assert single.trajectories == pooled.trajectories


def test_world_stacks_every_robot_into_one_graph():
    spec = scenario_from_dict(_fixed(CROSSING, params={"duration": 5.0}))
    env = load_environment(spec.environment, cell_size=spec.params.cell_size)
    world = runner._World(spec, env, 3, None)
    world.release_spawns(0.0)
    world.iterate()
    k = spec.params.num_variables

    assert sorted(world.robots) == [0, 1]
    assert all(robot.graph is world.graph for robot in world.robots.values())
    assert world.graph.num_variables == 2 * k
    assert len(world.graph.batches["dyn"]) == 2 * (k - 1)
    assert len(world.graph.batches["obs"]) == 2 * k


def test_total_comms_failure_isolates_robots():
    paired = scenario_from_dict(_fixed(CROSSING, params={"duration": 5.0, "gamma": 1.0}))
    solo = scenario_from_dict(_fixed(CROSSING[:1], params={"duration": 5.0, "gamma": 1.0}))

    paired_rows = [row for row in simulate(paired).trajectories if row[1] == 0]
    solo_rows = [row for row in simulate(solo).trajectories if row[1] == 0]

    assert len(paired_rows) == 50
    assert paired_rows == solo_rows


def test_sweep_seeds_are_distinct():
    seeds = sweep_seeds(42, 3, 4)
    flat = [s for row in seeds for s in row]

    assert len(set(flat)) == 12
    assert sweep_seeds(42, 3, 4) == seeds


def test_validate_gammas():
    assert validate_gammas([0, 0.5]) == [0.0, 0.5]
    with pytest.raises(ValueError):
        validate_gammas([])
    with pytest.raises(ValueError):
        validate_gammas([0.2, 1.2])


def test_failure_sweep_shapes():
    base = scenario_from_dict(_fixed([]))
    records, aggregates = failure_sweep(base, [0.0, 0.3, 0.7], 3)

    assert len(records) == 9
    assert [r.gamma for r in records[:4]] == [0.0, 0.0, 0.0, 0.3]
    assert len({r.seed for r in records}) == 9
    assert [row["gamma"] for row in aggregates] == [0.0, 0.3, 0.7]
    assert all(row["runs"] == 3 and row["failed_runs"] == 0 for row in aggregates)


L_PATH = [[10, 10], [60, 10], [60, 60]]


def test_path_tracking_beats_waypoint_tracking_on_l_path():
    robots = [{"start": L_PATH[0], "goal": L_PATH[-1], "waypoints": L_PATH}]
    params = {"duration": 40.0}

    wt = simulate(scenario_from_dict(_fixed(robots, method="WT", params=params))).record
    pt = simulate(scenario_from_dict(_fixed(robots, method="PT", params=params))).record

    assert wt.diagnostics["robots_finished"] == 1
    assert pt.diagnostics["robots_finished"] == 1
    assert pt.ppd_rmse_mean < 0.5 * wt.ppd_rmse_mean


def _headon_pair(offset: float) -> list[dict]:
    return [
        {"start": [10, 50], "goal": [90, 50]},
        {"start": [90, 50 + offset], "goal": [10, 50 + offset]},
    ]


@pytest.mark.parametrize("method", ["WT", "PT"])
@pytest.mark.parametrize("offset", [0.0, 0.3, -0.7])
def test_headon_pair_passes_without_collision(method, offset):
    spec = scenario_from_dict(_fixed(_headon_pair(offset), method=method, params={"duration": 40.0}))
    record = simulate(spec).record

    assert spec.params.d_i >= 4 * spec.params.robot_radius
    assert not record.incomplete
    assert record.inter_robot_collisions == 0
    assert record.diagnostics["robots_finished"] == 2


def test_per_robot_record_lists_deviations():
    spec = scenario_from_dict(_fixed(
        [{"start": [10, 50], "goal": [40, 50]}],
        params={"duration": 20.0}
    ))
    record = simulate(spec).record
    entry = record.per_robot["0"]

    assert len(entry["deviations"]) == entry["samples"]
    assert np.sqrt(np.mean(np.square(entry["deviations"]))) == pytest.approx(entry["rmse"], abs=1e-5)


def test_trajectory_rows_flag_ppd_samples():
    output = simulate(scenario_from_dict(_fixed(CROSSING, params={"duration": 5.0})))
    sampled = Counter(row[1] for row in output.trajectories if row[4] == 1)

    for rid, entry in output.record.per_robot.items():
        assert sampled[int(rid)] == entry["samples"]


def test_faulted_robot_rows_are_not_ppd_samples(monkeypatch):
    original = runner.step_robot
    calls = Counter()

    def _faulting_step(robot, dt_sim, **kwargs):
        calls[robot.id] += 1
        if robot.id == 0 and calls[0] == 5:
            robot.fault("injected")
            return
        original(robot, dt_sim, **kwargs)

    monkeypatch.setattr(runner, "step_robot", _faulting_step)
    output = simulate(scenario_from_dict(_fixed(CROSSING, params={"duration": 2.0})))

    rows = [row for row in output.trajectories if row[1] == 0]
    assert output.record.diagnostics["robots_faulted"] == 1
    assert len(rows) == 20
    assert [row[4] for row in rows] == [1] * 4 + [0] * 16
    assert len({(row[2], row[3]) for row in rows[4:]}) == 1
    assert output.record.per_robot["0"]["samples"] == 4
