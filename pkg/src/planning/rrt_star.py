"""
RRT* over the environment bounds with robot-radius-inflated obstacles.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Any

import numpy as np

from src.config import PLANNER_CONFIG, SIMULATION_CONFIG, DEBUG_CONFIG
from src.errors import PlanningFailedError
from src.schemas import PlannerKind
from src.env.environment import Environment
from src.planning.path import GlobalPath, point_clear, segment_clear
from src.utils.diagnostics import build_debug_logger

_dbg_progress = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="planning.rrt_star",
    key="print_progress"
)

@dataclass(frozen=True)
class RrtStarParams:
    step: float = 2.0
    max_iters: int = 10_000
    goal_bias: float = 0.05
    rewire_gamma: float = 4.0

    def __post_init__(self) -> None:
        if not (self.step > 0.0):
            raise ValueError(f"rrt_star.step must be > 0, got {self.step}")
        if self.max_iters < 1:
            raise ValueError(f"rrt_star.max_iters must be >= 1, got {self.max_iters}")
        if not (0.0 <= self.goal_bias <= 1.0):
            raise ValueError(f"rrt_star.goal_bias must be in [0, 1], got {self.goal_bias}")
        if not (self.rewire_gamma >= self.step):
            raise ValueError(f"rrt_star.rewire_gamma must be >= step, got {self.rewire_gamma}")

    @classmethod
    def from_dict(cls, cfg: dict[str, Any] | None=None) -> "RrtStarParams":
        merged = {**PLANNER_CONFIG["rrt_star"], **(cfg or {})}
        step = float(merged["step"])
        gamma = merged.get("rewire_gamma")

        return cls(
            step=step,
            max_iters=int(merged["max_iters"]),
            goal_bias=float(merged["goal_bias"]),
            rewire_gamma=2.0 * step if gamma is None else float(gamma)
        )

    def rewire_radius(self, n: int) -> float:
        """gamma * sqrt(log n / n), kept within [step, gamma]."""
        n = max(n, 2)
        return float(np.clip(self.rewire_gamma * np.sqrt(np.log(n) / n), self.step, self.rewire_gamma))


class _Tree:
    def __init__(self, root: np.ndarray, capacity: int):
        self.points = np.empty((capacity, 2))
        self.parent = np.full(capacity, -1, dtype=int)
        self.cost = np.zeros(capacity)
        self.children: list[list[int]] = []
        self.size = 0
        self.add(root, -1, 0.0)

    def add(self, p: np.ndarray, parent: int, cost: float) -> int:
        idx = self.size
        self.points[idx] = p
        self.parent[idx] = parent
        self.cost[idx] = cost
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(idx)
        self.size += 1
        return idx

    @property
    def nodes(self) -> np.ndarray:
        return self.points[:self.size]

    def reparent(self, idx: int, new_parent: int, new_cost: float) -> None:
        old = self.parent[idx]
        self.children[old].remove(idx)
        self.children[new_parent].append(idx)
        self.parent[idx] = new_parent

        delta = new_cost - self.cost[idx]
        stack = [idx]
        while stack:
            k = stack.pop()
            self.cost[k] += delta
            stack.extend(self.children[k])

    def branch(self, idx: int) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        while idx >= 0:
            out.append(self.points[idx].copy())
            idx = self.parent[idx]
        return out[::-1]


def rrt_star(
    env: Environment,
    start: np.ndarray,
    goal: np.ndarray,
    params: RrtStarParams,
    *,
    rng: np.random.Generator,
    robot_radius: float=float(SIMULATION_CONFIG["robot_radius"]),
    clearance_margin: float=float(SIMULATION_CONFIG["clearance_margin"])
) -> GlobalPath:
    """
    Returns the cheapest start->goal branch found after exactly `params.max_iters`
    iterations. The result only depends on (env, start, goal, params, rng state).
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    clearance = robot_radius + clearance_margin

    if not point_clear(env, start, clearance):
        raise PlanningFailedError(f"Start {start.tolist()} is not collision-free (clearance {clearance})")
    if not point_clear(env, goal, clearance):
        raise PlanningFailedError(f"Goal {goal.tolist()} is not collision-free (clearance {clearance})")

    if segment_clear(env, start, goal, clearance):
        return GlobalPath.from_points([start, goal], PlannerKind.RRT_STAR)

    xmin, ymin, xmax, ymax = env.bounds
    lo = np.array([xmin, ymin])
    hi = np.array([xmax, ymax])

    tree = _Tree(start, params.max_iters + 1)
    candidates: list[int] = []
    best = np.inf

    for it in range(params.max_iters):
        if rng.random() < params.goal_bias:
            sample = goal.copy()
        else:
            sample = rng.uniform(lo, hi)

        nodes = tree.nodes
        dists = np.linalg.norm(nodes - sample, axis=1)
        nearest = int(np.argmin(dists))
        gap = float(dists[nearest])
        if gap <= 1e-12:
            continue

        new = sample if gap <= params.step else nodes[nearest] + (sample - nodes[nearest]) * (params.step / gap)
        if not point_clear(env, new, clearance) or not segment_clear(env, nodes[nearest], new, clearance):
            continue

        radius = params.rewire_radius(tree.size + 1)
        near_d = np.linalg.norm(nodes - new, axis=1)
        near = [int(k) for k in np.flatnonzero(near_d <= radius)]

        parent = nearest
        cost = tree.cost[nearest] + float(near_d[nearest])
        for k in near:
            c = tree.cost[k] + float(near_d[k])
            if c < cost and segment_clear(env, nodes[k], new, clearance):
                parent, cost = k, c

        idx = tree.add(new, parent, cost)

        for k in near:
            if k == parent:
                continue
            c = cost + float(near_d[k])
            if c < tree.cost[k] and segment_clear(env, new, tree.points[k], clearance):
                tree.reparent(k, idx, c)

        to_goal = float(np.linalg.norm(goal - new))
        if cost + to_goal < best and segment_clear(env, new, goal, clearance):
            candidates.append(idx)
            best = cost + to_goal

        if (it + 1) % 1000 == 0:
            _dbg_progress(f"iter={it + 1} nodes={tree.size} best={best:.3f}")

    if not candidates:
        raise PlanningFailedError(
            f"RRT* found no path from {start.tolist()} to {goal.tolist()} in {params.max_iters} iterations"
        )

    final = [tree.cost[k] + float(np.linalg.norm(goal - tree.points[k])) for k in candidates]
    winner = candidates[int(np.argmin(final))]

    return GlobalPath.from_points(tree.branch(winner) + [goal], PlannerKind.RRT_STAR)
