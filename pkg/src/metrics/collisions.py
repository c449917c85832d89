"""
Edge-triggered collision counting: an event is registered only on the transition
from not-intersecting to intersecting.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.spatial.distance import pdist

from src.env.environment import Environment
from src.env.geometry import circle_circle_intersects, circle_obstacle_intersects

Pair = tuple[int, int]

@dataclass
class CollisionTracker:
    radius: float
    inter_robot: int = 0
    environment: int = 0
    _pairs: set[Pair] = field(default_factory=set)
    _env: set[tuple[int, int]] = field(default_factory=set)

    def update(
        self,
        positions: Mapping[int, np.ndarray],
        env: Environment
    ) -> tuple[int, int]:
        """
        Returns (new robot-robot events, new robot-obstacle events) at this timestep.
        """
        ids = sorted(positions)
        now_pairs: set[Pair] = set()

        if len(ids) >= 2:
            pts = np.stack([np.asarray(positions[i], dtype=float) for i in ids])
            dists = pdist(pts)
            rows, cols = np.triu_indices(len(ids), k=1)
            hit = dists < 2.0 * self.radius
            now_pairs = {(ids[i], ids[j]) for i, j in zip(rows[hit], cols[hit])}

        now_env: set[tuple[int, int]] = {
            (rid, k)
            for rid in ids
            for k, obstacle in enumerate(env.obstacles)
            if circle_obstacle_intersects(positions[rid], self.radius, obstacle)
        }

        new_pairs = len(now_pairs - self._pairs)
        new_env = len(now_env - self._env)

        self.inter_robot += new_pairs
        self.environment += new_env
        self._pairs = now_pairs
        self._env = now_env

        return new_pairs, new_env

def update_collisions(
    tracker: CollisionTracker,
    positions: Mapping[int, np.ndarray],
    env: Environment
) -> tuple[int, int]:
    return tracker.update(positions, env)


def replay_collisions(
    frames: Iterable[Mapping[int, np.ndarray]],
    radius: float,
    env: Environment
) -> tuple[int, int]:
    """
    Brute-force recount over recorded frames (one {robot_id: position} map per
    timestep), pair by pair with the exact colliders.
    """
    prev_pairs: set[Pair] = set()
    prev_env: set[tuple[int, int]] = set()
    inter_robot = 0
    environment = 0

    for frame in frames:
        ids = sorted(frame)
        pairs = set()
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if circle_circle_intersects(frame[a], radius, frame[b], radius):
                    pairs.add((a, b))

        hits = set()
        for rid in ids:
            for k, obstacle in enumerate(env.obstacles):
                if circle_obstacle_intersects(frame[rid], radius, obstacle):
                    hits.add((rid, k))

        inter_robot += len(pairs - prev_pairs)
        environment += len(hits - prev_env)
        prev_pairs, prev_env = pairs, hits

    return inter_robot, environment
