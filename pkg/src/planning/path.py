"""
GlobalPath plus the clearance checks shared by the planners.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from src.schemas import PlannerKind
from src.env.environment import Environment, circle_env_intersects
from src.env.geometry import segment_obstacle_distance
from src.env.sdf import sdf_at

@dataclass(frozen=True, eq=False)
class GlobalPath:
    waypoints: np.ndarray           # (n, 2)
    source: PlannerKind = PlannerKind.MANUAL

    def __post_init__(self) -> None:
        pts = np.array(self.waypoints, dtype=float)

        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"Waypoints must have shape (n, 2), got {pts.shape}")
        if len(pts) < 2:
            raise ValueError(f"A path needs at least 2 waypoints, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("Waypoints must be finite")

        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(steps <= 0.0):
            k = int(np.argmax(steps <= 0.0))
            raise ValueError(f"Consecutive waypoints {k} and {k + 1} coincide at {pts[k].tolist()}")

        pts.setflags(write=False)
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "source", PlannerKind(self.source))

    @classmethod
    def from_points(
        cls,
        points: Sequence[Sequence[float]] | np.ndarray,
        source: PlannerKind=PlannerKind.MANUAL,
        *, tol: float=1e-9
    ) -> "GlobalPath":
        """Drops consecutive duplicates before validating."""
        kept: list[np.ndarray] = []
        for p in np.asarray(points, dtype=float):
            if not kept or np.linalg.norm(p - kept[-1]) > tol:
                kept.append(p)
        return cls(np.array(kept), source)

    def __len__(self) -> int:
        return len(self.waypoints)

    @property
    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.waypoints[:-1], self.waypoints[1:]))

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def goal(self) -> np.ndarray:
        return self.waypoints[-1]

    def to_dict(self) -> dict[str, Any]:
        return {"source": self.source.value, "waypoints": self.waypoints.tolist()}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "GlobalPath":
        return cls(np.asarray(payload["waypoints"], dtype=float), PlannerKind(payload.get("source", "manual")))


def point_clear(env: Environment, p: np.ndarray, clearance: float) -> bool:
    return env.contains(p) and not circle_env_intersects(p, clearance, env)

def segment_clear(
    env: Environment,
    a: np.ndarray,
    b: np.ndarray,
    clearance: float
) -> bool:
    """
    True when every point of a-b is at least `clearance` from every obstacle. The SDF
    (1-Lipschitz, accurate to one cell) settles most queries; the rest use exact geometry.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    if not env.obstacles:
        return True

    half = 0.5 * float(np.linalg.norm(b - a))
    lower = min(sdf_at(env.sdf, a), sdf_at(env.sdf, b)) - half - env.sdf.cell_size
    if lower >= clearance:
        return True

    return all(segment_obstacle_distance(a, b, obstacle) >= clearance for obstacle in env.obstacles)

def path_clear(env: Environment, path: GlobalPath, clearance: float) -> bool:
    return all(segment_clear(env, a, b, clearance) for a, b in path.segments)
