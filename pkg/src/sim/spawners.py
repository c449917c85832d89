"""
Spawn schedules. A due robot whose spawn point is occupied is deferred to the next
free timestep, never dropped.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.config import SPAWN_CONFIG
from src.schemas import SpawnModel
from src.env.environment import Environment, Site
from src.sim.scenario import ScenarioSpec

@dataclass(frozen=True, eq=False)
class SpawnEvent:
    robot_id: int
    time: float
    start: np.ndarray
    goal: np.ndarray
    site: str | None = None
    goal_site: str | None = None
    waypoints: list[list[float]] | None = None


def junction_spawner(
    sites: dict[str, Site],
    rng: np.random.Generator,
    *,
    rate: float,
    count: int
) -> list[SpawnEvent]:
    """
    Robot k appears at k / rate seconds on a uniformly drawn side with a goal drawn
    uniformly from the remaining sides.
    """
    names = sorted(sites)
    if len(names) < 2:
        raise ValueError(f"junction spawning needs at least 2 sites, environment has {len(names)}")

    events: list[SpawnEvent] = []
    for k in range(count):
        side = int(rng.integers(len(names)))
        other = int(rng.integers(len(names) - 1))
        goal_side = other if other < side else other + 1

        events.append(SpawnEvent(
            robot_id=k,
            time=k / rate,
            start=sites[names[side]].spawn.copy(),
            goal=sites[names[goal_side]].goal.copy(),
            site=names[side],
            goal_site=names[goal_side]
        ))
    return events

def fixed_list_spawner(spec: ScenarioSpec) -> list[SpawnEvent]:
    events = [
        SpawnEvent(
            robot_id=k,
            time=r.time,
            start=np.array(r.start, dtype=float),
            goal=np.array(r.goal, dtype=float),
            waypoints=None if r.waypoints is None else [list(p) for p in r.waypoints]
        )
        for k, r in enumerate(spec.spawn.robots)
    ]
    return sorted(events, key=lambda e: (e.time, e.robot_id))

def build_spawn_events(
    spec: ScenarioSpec,
    env: Environment,
    rng: np.random.Generator
) -> list[SpawnEvent]:
    match spec.spawn.model:
        case SpawnModel.JUNCTION_RANDOM_SIDES:
            return junction_spawner(env.sites, rng, rate=spec.spawn.rate, count=spec.spawn.count)
        case SpawnModel.FIXED_LIST:
            return fixed_list_spawner(spec)


class SpawnQueue:
    def __init__(
        self,
        events: Iterable[SpawnEvent],
        *,
        clearance: float
    ):
        self.pending: list[SpawnEvent] = sorted(events, key=lambda e: (e.time, e.robot_id))
        self.clearance = float(clearance)
        self.deferrals = 0

    def __len__(self) -> int:
        return len(self.pending)

    def pop_ready(
        self,
        t: float,
        occupied_by: Sequence[np.ndarray],
        *, eps: float=1e-9
    ) -> list[SpawnEvent]:
        """
        Events due at time t whose start is at least `clearance` from every position in
        `occupied_by` and from every event released earlier in the same call.
        """
        taken = [np.asarray(p, dtype=float) for p in occupied_by]
        ready: list[SpawnEvent] = []
        waiting: list[SpawnEvent] = []

        for event in self.pending:
            if event.time > t + eps:
                waiting.append(event)
                continue

            if any(np.linalg.norm(event.start - p) < self.clearance for p in taken):
                self.deferrals += 1
                waiting.append(event)
                continue

            ready.append(event)
            taken.append(event.start)

        self.pending = waiting
        return ready


def spawn_clearance(robot_radius: float, margin: float) -> float:
    return float(SPAWN_CONFIG["occupancy_factor"]) * robot_radius + margin
