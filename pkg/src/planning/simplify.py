from __future__ import annotations

from src.config import SIMULATION_CONFIG
from src.env.environment import Environment
from src.planning.path import GlobalPath, segment_clear

def simplify_path(
    path: GlobalPath,
    env: Environment,
    *, clearance: float=float(SIMULATION_CONFIG["robot_radius"])
) -> GlobalPath:
    """
    Greedy shortcutting: from each kept waypoint jump to the farthest later waypoint
    reachable by a clear straight segment. Endpoints are preserved.
    """
    pts = path.waypoints
    n = len(pts)
    kept = [pts[0]]
    i = 0

    while i < n - 1:
        j = i + 1
        while j + 1 < n and segment_clear(env, pts[i], pts[j + 1], clearance):
            j += 1
        kept.append(pts[j])
        i = j

    return GlobalPath.from_points(kept, path.source)
