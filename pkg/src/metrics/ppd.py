"""
Perpendicular path deviation (PPD): distance from a sampled position to the nearest
point of the planned polyline, reported as an RMSE.
"""
from __future__ import annotations

import numpy as np

from src.env.geometry import points_segment_distance

def min_segment_distances(samples: np.ndarray, waypoints: np.ndarray) -> np.ndarray:
    """Per-sample distance to the closest segment (projections clamped to the segment)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    waypoints = np.asarray(waypoints, dtype=float)

    per_segment = np.stack([
        points_segment_distance(samples, a, b)
        for a, b in zip(waypoints[:-1], waypoints[1:])
    ])
    return per_segment.min(axis=0)

def ppd_rmse(
    samples: np.ndarray,
    waypoints: np.ndarray,
    *, literal: bool=False
) -> float:
    """
    sqrt(mean(d_j^2)). With literal=True the squared minimum squared distance is
    averaged instead: sqrt(mean((d_j^2)^2)).
    """
    samples = np.asarray(samples, dtype=float)
    waypoints = np.asarray(waypoints, dtype=float)

    if samples.size == 0:
        raise ValueError("ppd_rmse needs at least one sample")
    if waypoints.ndim != 2 or len(waypoints) < 2:
        raise ValueError("ppd_rmse needs at least one path segment")

    d = min_segment_distances(samples, waypoints)
    if literal:
        return float(np.sqrt(np.mean((d ** 2) ** 2)))
    return float(np.sqrt(np.mean(d ** 2)))
