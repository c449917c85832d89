"""
Main simulation loop.

All robots of a run share one FactorGraph, so every GBP round is a handful of
stacked array operations over the whole world.

Each timestep:
  1. release due spawns (plan paths, add the robots' horizon chains to the graph)
  2. neighbor discovery and the per-robot comms draw
  3. T_I internal and T_E external GBP rounds (interleaved or sequential)
  4. step every active robot
  5. metrics pass: collisions, PPD samples, trajectory rows
  6. remove finished robots from the world and from the graph

Only path planning in 1 runs on a thread pool. Robots join the graph and everything
else runs on the calling thread in robot-id order, so results do not depend on the
number of workers.
"""
from __future__ import annotations
from collections import Counter
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any
import math

import numpy as np
from tqdm import tqdm

from src.config import DEBUG_CONFIG
from src.errors import PlanningFailedError
from src.schemas import RobotStatus, Schedule
from src.env.environment import Environment, load_environment
from src.metrics.collisions import CollisionTracker
from src.gbp.graph import FactorGraph, iterate_internal
from src.metrics.ppd import min_segment_distances, ppd_rmse
from src.metrics.record import MetricsRecord, rmse_summary
from src.robots.comms import CommsChannel, InterrobotNetwork, external_round, neighbor_discovery
from src.planning.path import GlobalPath
from src.robots.robot import Robot, plan_robot_path, refresh_anchors, step_robot
from src.sim.rng import Stream, stream
from src.sim.scenario import ScenarioSpec
from src.sim.spawners import SpawnEvent, SpawnQueue, build_spawn_events, spawn_clearance
from src.utils.diagnostics import build_debug_logger, merge_counters, warn

_dbg_spawns = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="sim.runner",
    key="print_spawns"
)

# sampled = 1 when the row is also a PPD sample (the robot moved that step)
TRAJECTORY_COLUMNS = ["t", "robot_id", "x", "y", "sampled"]

TrajectoryRow = tuple[float, int, float, float, int]

@dataclass
class SimulationOutput:
    record: MetricsRecord
    trajectories: list[TrajectoryRow] = field(default_factory=list)
    paths: dict[str, dict[str, Any]] = field(default_factory=dict)


class _World:
    def __init__(self, spec: ScenarioSpec, env: Environment, seed: int, pool: Executor | None):
        p = spec.params
        self.spec = spec
        self.env = env
        self.seed = seed
        self.pool = pool

        self.robots: dict[int, Robot] = {}
        self.channel = CommsChannel(p.gamma, stream(seed, Stream.COMMS))
        fp = p.factor_params()
        self.graph = FactorGraph(damping=p.damping)
        self.network = InterrobotNetwork(self.graph, sigma=fp.sigma_interrobot, d_i=fp.d_i, damping=p.damping)
        self.collisions = CollisionTracker(radius=p.robot_radius)
        self.queue = SpawnQueue(
            build_spawn_events(spec, env, stream(seed, Stream.SPAWN)),
            clearance=spawn_clearance(p.robot_radius, p.clearance_margin)
        )

        self.samples: dict[int, list[np.ndarray]] = {}
        self.paths: dict[int, Any] = {}
        self.trajectories: list[TrajectoryRow] = []
        self.counters: Counter = Counter()
        self.retired: list[Robot] = []
        self.sim_time = 0.0

    def _map(self, fn, items: list) -> list:
        if self.pool is None or len(items) < 2:
            return [fn(x) for x in items]
        return list(self.pool.map(fn, items))

    @property
    def active(self) -> list[Robot]:
        return sorted((r for r in self.robots.values() if r.is_active), key=lambda r: r.id)

    def _plan_one(self, event: SpawnEvent) -> GlobalPath | PlanningFailedError:
        spec = self.spec
        try:
            return plan_robot_path(
                event.start, event.goal, self.env, spec.params,
                method=spec.method,
                planner=spec.planner,
                rng=stream(self.seed, Stream.RRT_STAR, event.robot_id),
                rrt_params=spec.rrt_params,
                simplify=spec.simplify,
                waypoints=event.waypoints
            )
        except PlanningFailedError as e:
            return e

    def release_spawns(self, t: float) -> None:
        occupied = [r.position for r in self.robots.values()]
        ready = self.queue.pop_ready(t, occupied)

        for event, result in zip(ready, self._map(self._plan_one, ready)):
            if isinstance(result, PlanningFailedError):
                self.counters["planning_failures"] += 1
                warn("sim.runner", f"robot {event.robot_id} skipped: {result}")
                continue

            robot = Robot(event.robot_id, result, self.env, self.spec.params, self.spec.method, graph=self.graph)
            self.robots[robot.id] = robot
            self.samples[robot.id] = []
            self.paths[robot.id] = robot.path
            self.counters["robots_spawned"] += 1
            _dbg_spawns(f"t={t:.2f} robot {robot.id} at {event.start.tolist()} -> {event.goal.tolist()}")

    def _internal_round(self) -> None:
        iterate_internal(self.graph, 1)

    def _external_round(self) -> None:
        self.counters["messages"] += external_round(self.network, self.channel)

    def iterate(self) -> None:
        p = self.spec.params
        robots = self.active

        neighbor_discovery(robots, p.comms_radius, self.network)
        self.channel.draw([r.id for r in robots])

        match p.schedule:
            case Schedule.INTERLEAVED:
                for k in range(max(p.internal_iters, p.external_iters)):
                    if k < p.internal_iters:
                        self._internal_round()
                    if k < p.external_iters:
                        self._external_round()
            case Schedule.SEQUENTIAL:
                for _ in range(p.internal_iters):
                    self._internal_round()
                for _ in range(p.external_iters):
                    self._external_round()

    def step(self, t_next: float) -> None:
        p = self.spec.params
        moving = self.active

        for robot in moving:
            step_robot(robot, p.dt_sim, refresh=False)
        refresh_anchors(self.graph)

        sampled: set[int] = set()
        for robot in moving:
            if robot.status != RobotStatus.FAULTED:
                self.samples[robot.id].append(robot.position.copy())
                sampled.add(robot.id)

        positions = {rid: r.position.copy() for rid, r in sorted(self.robots.items())}
        self.collisions.update(positions, self.env)

        t_row = round(t_next, 9)
        for rid, pos in positions.items():
            self.trajectories.append((t_row, rid, float(pos[0]), float(pos[1]), int(rid in sampled)))

        for robot in moving:
            if robot.status == RobotStatus.FINISHED:
                self.counters["robots_finished"] += 1
                self.network.drop_robot(robot.id)
                robot.detach()
                self.retired.append(self.robots.pop(robot.id))
            elif robot.status == RobotStatus.FAULTED:
                self.counters["robots_faulted"] += 1
                self.network.drop_robot(robot.id)
                warn("sim.runner", f"robot {robot.id} faulted at t={t_next:.2f} and was frozen")

        self.sim_time = t_next

    @property
    def done(self) -> bool:
        return not self.queue and not self.active

    def record(self, *, incomplete: bool=False, error: str | None=None) -> MetricsRecord:
        spec = self.spec
        per_robot: dict[str, dict[str, Any]] = {}

        for rid in sorted(self.samples):
            samples = self.samples[rid]
            if not samples:
                continue
            waypoints = self.paths[rid].waypoints
            per_robot[str(rid)] = {
                "rmse": ppd_rmse(np.stack(samples), waypoints, literal=spec.ppd_literal),
                "samples": len(samples),
                "deviations": [round(float(d), 6) for d in min_segment_distances(np.stack(samples), waypoints)],
            }

        mean, std = rmse_summary(v["rmse"] for v in per_robot.values())

        every_robot = list(self.robots.values()) + self.retired
        numeric = merge_counters([r.diagnostics_counter() for r in every_robot] + [self.graph.diagnostics()])
        diagnostics: dict[str, Any] = {
            "robots_spawned": self.counters["robots_spawned"],
            "robots_finished": self.counters["robots_finished"],
            "robots_faulted": self.counters["robots_faulted"],
            "robots_unfinished": len(self.active),
            "planning_failures": self.counters["planning_failures"],
            "spawn_deferrals": self.queue.deferrals,
            "spawns_pending": len(self.queue),
            "messages": self.counters["messages"],
            "singular": numeric.get("singular", 0),
            "guard": numeric.get("guard", 0),
            "offline_fraction": self.channel.offline_fraction,
            "sim_time": round(self.sim_time, 9),
        }

        return MetricsRecord(
            scenario=spec.name,
            seed=self.seed,
            gamma=spec.params.gamma,
            method=spec.method,
            planner=spec.planner,
            inter_robot_collisions=self.collisions.inter_robot,
            environment_collisions=self.collisions.environment,
            ppd_rmse_mean=mean,
            ppd_rmse_std=std,
            per_robot=per_robot,
            params=spec.to_dict(),
            diagnostics=diagnostics,
            incomplete=incomplete,
            error=error
        )


def simulate(
    spec: ScenarioSpec,
    *,
    seed: int | None=None,
    threads: int | None=1,
    env: Environment | None=None,
    progress: bool=False
) -> SimulationOutput:
    """
    Run one scenario to completion (all spawned robots finished, or the duration is
    reached). Unexpected exceptions end the run early with the record flagged
    `incomplete`; they are never raised.
    """
    run_seed = spec.resolved_seed() if seed is None else int(seed)
    env = env or load_environment(spec.environment, cell_size=spec.params.cell_size)

    p = spec.params
    n_steps = int(math.ceil(p.duration / p.dt_sim - 1e-9))
    workers = threads if threads and threads > 0 else None

    pool = ThreadPoolExecutor(max_workers=workers) if workers != 1 else None
    world = _World(spec, env, run_seed, pool)
    incomplete = False
    error: str | None = None

    try:
        for n in tqdm(range(n_steps), desc=spec.name, disable=not progress, leave=False):
            t = n * p.dt_sim
            world.release_spawns(t)
            if world.done:
                break
            world.iterate()
            world.step((n + 1) * p.dt_sim)
    except Exception as e:
        incomplete = True
        error = f"{type(e).__name__}: {e}"
        warn("sim.runner", f"{spec.name} seed={run_seed} stopped early: {error}")
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    return SimulationOutput(
        record=world.record(incomplete=incomplete, error=error),
        trajectories=world.trajectories,
        paths={str(rid): path.to_dict() for rid, path in sorted(world.paths.items())}
    )

def run_scenario(
    spec: ScenarioSpec,
    *,
    seed: int | None=None,
    threads: int | None=1
) -> MetricsRecord:
    return simulate(spec, seed=seed, threads=threads).record
