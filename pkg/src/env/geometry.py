"""
Exact 2-D geometry for obstacle colliders: circles and convex polygons.

Signed distances are negative inside an obstacle. Everything here is vectorized
over an (N, 2) array of points where that is useful to the SDF builder.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True, eq=False)
class Circle:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        center = np.array(self.center, dtype=float).reshape(-1)
        if center.shape != (2,):
            raise ValueError(f"Circle center must be a 2-D point, got {self.center!r}")
        if not (float(self.radius) > 0.0):
            raise ValueError(f"Circle radius must be > 0, got {self.radius}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    def bounding_box(self) -> tuple[float, float, float, float]:
        x, y = self.center
        r = self.radius
        return (x - r, y - r, x + r, y + r)


@dataclass(frozen=True, eq=False)
class Polygon:
    """Convex polygon; vertices are stored counter-clockwise."""
    vertices: np.ndarray

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValueError(f"Polygon needs at least 3 2-D vertices, got shape {verts.shape}")

        if _signed_area(verts) < 0.0:
            verts = verts[::-1].copy()
        if not _is_convex(verts):
            raise ValueError(f"Polygon must be convex with non-zero area: {verts.tolist()}")

        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return (lo[0], lo[1], hi[0], hi[1])


Obstacle = Union[Circle, Polygon]


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

def _is_convex(verts: np.ndarray) -> bool:
    a = verts
    b = np.roll(verts, -1, axis=0)
    c = np.roll(verts, -2, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - b[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - b[:, 0])
    return bool(np.all(cross >= -1e-12)) and _signed_area(verts) > 0.0


def rectangle(xmin: float, ymin: float, xmax: float, ymax: float) -> Polygon:
    return Polygon(np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]]))


def points_segment_distance(
    points: np.ndarray,
    a: np.ndarray,
    b: np.ndarray
) -> np.ndarray:
    """
    Distance from each point to the closed segment a-b (projection clamped).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(a, dtype=float)
    ab = np.asarray(b, dtype=float) - a
    denom = float(ab @ ab)

    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)

    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)

def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(points_segment_distance(p, a, b)[0])

def points_in_polygon(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """
    Even-odd ray casting along +x.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]

    v0, v1 = poly.edges
    x0, y0 = v0[:, 0][None, :], v0[:, 1][None, :]
    x1, y1 = v1[:, 0][None, :], v1[:, 1][None, :]

    straddles = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    crossings = straddles & (px < x_cross)

    return (np.count_nonzero(crossings, axis=1) % 2) == 1

def signed_distance(points: np.ndarray, obstacle: Obstacle) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))

    if isinstance(obstacle, Circle):
        return np.linalg.norm(points - obstacle.center, axis=1) - obstacle.radius

    v0, v1 = obstacle.edges
    dists = np.min(
        np.stack([points_segment_distance(points, a, b) for a, b in zip(v0, v1)]),
        axis=0
    )
    inside = points_in_polygon(points, obstacle)
    return np.where(inside, -dists, dists)


def circle_circle_intersects(
    c1: np.ndarray,
    r1: float,
    c2: np.ndarray,
    r2: float
) -> bool:
    gap = np.asarray(c1, dtype=float) - np.asarray(c2, dtype=float)
    return bool(float(np.hypot(gap[0], gap[1])) < r1 + r2)

def circle_obstacle_intersects(c: np.ndarray, r: float, obstacle: Obstacle) -> bool:
    return bool(signed_distance(np.asarray(c, dtype=float)[None, :], obstacle)[0] < r)


def _orientation(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))

def _on_segment(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> bool:
    return (
        min(p[0], r[0]) - 1e-12 <= q[0] <= max(p[0], r[0]) + 1e-12
        and min(p[1], r[1]) - 1e-12 <= q[1] <= max(p[1], r[1]) + 1e-12
    )

def segments_intersect(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> bool:
    o1 = _orientation(a, b, c)
    o2 = _orientation(a, b, d)
    o3 = _orientation(c, d, a)
    o4 = _orientation(c, d, b)

    if (o1 > 0) != (o2 > 0) and (o3 > 0) != (o4 > 0) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True

    if o1 == 0 and _on_segment(a, c, b):
        return True
    if o2 == 0 and _on_segment(a, d, b):
        return True
    if o3 == 0 and _on_segment(c, a, d):
        return True
    if o4 == 0 and _on_segment(c, b, d):
        return True
    return False

def segment_obstacle_distance(a: np.ndarray, b: np.ndarray, obstacle: Obstacle) -> float:
    """
    Unsigned distance between segment a-b and the obstacle; 0 when they touch or overlap.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    if isinstance(obstacle, Circle):
        return max(0.0, point_segment_distance(obstacle.center, a, b) - obstacle.radius)

    if points_in_polygon(np.stack([a, b]), obstacle).any():
        return 0.0

    v0, v1 = obstacle.edges
    for p, q in zip(v0, v1):
        if segments_intersect(a, b, p, q):
            return 0.0

    to_edges = min(
        float(points_segment_distance(np.stack([a, b]), p, q).min())
        for p, q in zip(v0, v1)
    )
    to_segment = float(points_segment_distance(obstacle.vertices, a, b).min())
    return min(to_edges, to_segment)
