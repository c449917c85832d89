"""
Planner dispatch: one entry point for rrt_star | structured | manual paths.
"""
from __future__ import annotations
from typing import Sequence

import numpy as np

from src.config import PLANNER_CONFIG
from src.errors import PlanningFailedError
from src.schemas import PlannerKind
from src.env.environment import Environment
from src.planning.lanes import astar_lanes
from src.planning.path import GlobalPath, path_clear
from src.planning.rrt_star import RrtStarParams, rrt_star

def plan_path(
    env: Environment,
    start: np.ndarray,
    goal: np.ndarray,
    kind: PlannerKind,
    *,
    robot_radius: float,
    clearance_margin: float,
    rng: np.random.Generator | None=None,
    rrt_params: RrtStarParams | None=None,
    snap_radius: float=float(PLANNER_CONFIG["structured"]["snap_radius"]),
    waypoints: Sequence[Sequence[float]] | None=None
) -> GlobalPath:
    """
    Planner outputs are re-checked for robot-radius clearance before they are returned.
    """
    match PlannerKind(kind):
        case PlannerKind.RRT_STAR:
            if rng is None:
                raise ValueError("rrt_star planning needs an rng stream")
            path = rrt_star(
                env, start, goal,
                rrt_params or RrtStarParams.from_dict(),
                rng=rng,
                robot_radius=robot_radius,
                clearance_margin=clearance_margin
            )
        case PlannerKind.STRUCTURED:
            if env.lane_graph is None:
                raise PlanningFailedError(f"Environment {env.name!r} has no lane graph for the structured planner")
            path = astar_lanes(env.lane_graph, start, goal, snap_radius=snap_radius)
        case PlannerKind.MANUAL:
            if waypoints is None:
                points = [start, goal]
            else:
                points = [np.asarray(p, dtype=float) for p in waypoints]
            return GlobalPath.from_points(points, PlannerKind.MANUAL)

    if not path_clear(env, path, robot_radius):
        raise PlanningFailedError(
            f"{path.source.value} path violates robot-radius clearance ({robot_radius} m)"
        )
    return path
