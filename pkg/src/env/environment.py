"""
Environment model and the strict environment-file loader.

File shape:
{
  "name": "junction",                                   # optional
  "bounds": [xmin, ymin, xmax, ymax],
  "obstacles": [
    {"type": "circle", "center": [x, y], "radius": r},
    {"type": "polygon", "vertices": [[x, y], ...]}      # convex
  ],
  "lanes": {"nodes": [[x, y], ...], "edges": [[from, to], ...]},   # optional
  "sites": {"west": {"spawn": [x, y], "goal": [x, y]}, ...}        # optional
}
"""
from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from src.config import SDF_CONFIG
from src.errors import EnvironmentFileError
from src.env.geometry import Circle, Polygon, Obstacle, circle_obstacle_intersects
from src.env.sdf import SdfGrid, build_sdf
from src.utils.artifacts import load_json_document

_TOP_LEVEL_KEYS = {"name", "bounds", "obstacles", "lanes", "sites"}
_CIRCLE_KEYS = {"type", "center", "radius"}
_POLYGON_KEYS = {"type", "vertices"}
_LANE_KEYS = {"nodes", "edges"}
_SITE_KEYS = {"spawn", "goal"}

@dataclass(frozen=True)
class LaneEdge:
    source: int
    target: int
    length: float


@dataclass(frozen=True, eq=False)
class LaneGraph:
    nodes: np.ndarray                       # (n, 2)
    edges: tuple[LaneEdge, ...]
    _adjacency: dict[int, list[LaneEdge]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"Lane nodes must have shape (n, 2), got {nodes.shape}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

        adjacency: dict[int, list[LaneEdge]] = {i: [] for i in range(len(nodes))}
        for edge in self.edges:
            adjacency[edge.source].append(edge)
        for out in adjacency.values():
            out.sort(key=lambda e: e.target)
        object.__setattr__(self, "_adjacency", adjacency)

    @classmethod
    def from_pairs(
        cls,
        nodes: Sequence[Sequence[float]] | np.ndarray,
        pairs: Sequence[Sequence[int]]
    ) -> "LaneGraph":
        """Edge lengths are the Euclidean node distances."""
        pts = np.asarray(nodes, dtype=float)
        n = len(pts)
        edges: list[LaneEdge] = []

        for pair in pairs:
            a, b = (int(v) for v in pair)
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"Lane edge {[a, b]} references a missing node (have {n})")
            if a == b:
                raise ValueError(f"Lane edge {[a, b]} is a self-loop")
            edges.append(LaneEdge(a, b, float(np.linalg.norm(pts[b] - pts[a]))))

        return cls(nodes=pts, edges=tuple(edges))

    def __len__(self) -> int:
        return len(self.nodes)

    def successors(self, node: int) -> list[LaneEdge]:
        return self._adjacency.get(node, [])

    def nearest_node(self, point: Sequence[float] | np.ndarray) -> tuple[int, float]:
        dists = np.linalg.norm(self.nodes - np.asarray(point, dtype=float), axis=1)
        idx = int(np.argmin(dists))
        return idx, float(dists[idx])

    def is_weakly_connected(self) -> bool:
        if len(self.nodes) == 0:
            return True

        neighbors: dict[int, set[int]] = {i: set() for i in range(len(self.nodes))}
        for e in self.edges:
            neighbors[e.source].add(e.target)
            neighbors[e.target].add(e.source)

        seen = {0}
        stack = [0]
        while stack:
            for nxt in neighbors[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)


@dataclass(frozen=True, eq=False)
class Site:
    name: str
    spawn: np.ndarray
    goal: np.ndarray


@dataclass(frozen=True, eq=False)
class Environment:
    bounds: tuple[float, float, float, float]
    obstacles: tuple[Obstacle, ...]
    sdf: SdfGrid
    lane_graph: LaneGraph | None = None
    sites: dict[str, Site] = field(default_factory=dict)
    name: str = "environment"

    def contains(self, point: Sequence[float] | np.ndarray) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return bool(xmin <= point[0] <= xmax and ymin <= point[1] <= ymax)

    @property
    def site_names(self) -> list[str]:
        return sorted(self.sites)


def make_environment(
    bounds: Sequence[float],
    obstacles: Sequence[Obstacle]=(),
    *,
    lane_graph: LaneGraph | None=None,
    sites: dict[str, Site] | None=None,
    name: str="environment",
    cell_size: float=float(SDF_CONFIG["cell_size"])
) -> Environment:
    bounds_t = tuple(float(v) for v in bounds)
    if len(bounds_t) != 4:
        raise ValueError(f"bounds must be [xmin, ymin, xmax, ymax], got {list(bounds)}")

    xmin, ymin, xmax, ymax = bounds_t
    for i, obstacle in enumerate(obstacles):
        oxmin, oymin, oxmax, oymax = obstacle.bounding_box()
        if oxmin < xmin or oymin < ymin or oxmax > xmax or oymax > ymax:
            raise ValueError(f"Obstacle #{i} extends outside bounds {list(bounds_t)}")

    return Environment(
        bounds=bounds_t,
        obstacles=tuple(obstacles),
        sdf=build_sdf(bounds_t, obstacles, cell_size=cell_size),
        lane_graph=lane_graph,
        sites=dict(sites or {}),
        name=name
    )

def circle_env_intersects(
    c: Sequence[float] | np.ndarray,
    r: float,
    env: Environment
) -> bool:
    """Exact collider test against every obstacle (the SDF is not consulted)."""
    center = np.asarray(c, dtype=float)
    return any(circle_obstacle_intersects(center, r, obstacle) for obstacle in env.obstacles)


# Strict parsing
def _point(value: Any, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValueError(f"{where} must be a [x, y] pair, got {value!r}")
    try:
        pt = np.array([float(value[0]), float(value[1])])
    except (TypeError, ValueError) as e:
        raise ValueError(f"{where} must contain numbers, got {value!r}") from e
    if not np.all(np.isfinite(pt)):
        raise ValueError(f"{where} must be finite, got {value!r}")
    return pt

def _reject_unknown(obj: dict[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {unknown}; allowed {sorted(allowed)}")

def _parse_obstacle(obj: Any, i: int) -> Obstacle:
    where = f"obstacles[{i}]"
    if not isinstance(obj, dict):
        raise ValueError(f"{where} must be an object")

    match obj.get("type"):
        case "circle":
            _reject_unknown(obj, _CIRCLE_KEYS, where)
            radius = obj.get("radius")
            if isinstance(radius, bool) or not isinstance(radius, (int, float)):
                raise ValueError(f"{where}.radius must be a number, got {radius!r}")
            return Circle(_point(obj.get("center"), f"{where}.center"), float(radius))
        case "polygon":
            _reject_unknown(obj, _POLYGON_KEYS, where)
            verts = obj.get("vertices")
            if not isinstance(verts, list):
                raise ValueError(f"{where}.vertices must be a list of [x, y] pairs")
            return Polygon(np.stack([_point(v, f"{where}.vertices[{k}]") for k, v in enumerate(verts)]))
        case other:
            raise ValueError(f"{where}.type must be 'circle' or 'polygon', got {other!r}")

def _parse_lanes(obj: Any) -> LaneGraph:
    if not isinstance(obj, dict):
        raise ValueError("lanes must be an object")
    _reject_unknown(obj, _LANE_KEYS, "lanes")

    nodes = obj.get("nodes")
    edges = obj.get("edges")
    if not isinstance(nodes, list) or not nodes:
        raise ValueError("lanes.nodes must be a non-empty list")
    if not isinstance(edges, list):
        raise ValueError("lanes.edges must be a list of [from, to] pairs")

    pts = [_point(v, f"lanes.nodes[{k}]") for k, v in enumerate(nodes)]
    for k, e in enumerate(edges):
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(v, int) for v in e):
            raise ValueError(f"lanes.edges[{k}] must be a [from, to] pair of ints, got {e!r}")

    graph = LaneGraph.from_pairs(pts, edges)
    if not graph.is_weakly_connected():
        raise ValueError("lanes: graph is not connected (ignoring edge directions)")
    return graph

def _parse_sites(obj: Any) -> dict[str, Site]:
    if not isinstance(obj, dict):
        raise ValueError("sites must be an object mapping name -> {spawn, goal}")

    sites: dict[str, Site] = {}
    for name, site in obj.items():
        where = f"sites.{name}"
        if not isinstance(site, dict):
            raise ValueError(f"{where} must be an object")
        _reject_unknown(site, _SITE_KEYS, where)
        sites[str(name)] = Site(
            name=str(name),
            spawn=_point(site.get("spawn"), f"{where}.spawn"),
            goal=_point(site.get("goal"), f"{where}.goal")
        )
    return sites

def environment_from_dict(
    payload: Any,
    *,
    cell_size: float=float(SDF_CONFIG["cell_size"]),
    default_name: str="environment"
) -> Environment:
    if not isinstance(payload, dict):
        raise ValueError("Environment file must contain a JSON object")
    _reject_unknown(payload, _TOP_LEVEL_KEYS, "environment")

    bounds = payload.get("bounds")
    if not isinstance(bounds, list) or len(bounds) != 4:
        raise ValueError(f"bounds must be [xmin, ymin, xmax, ymax], got {bounds!r}")
    bounds = [float(v) for v in bounds]
    if not (bounds[2] > bounds[0] and bounds[3] > bounds[1]):
        raise ValueError(f"bounds are empty: {bounds}")

    raw_obstacles = payload.get("obstacles", [])
    if not isinstance(raw_obstacles, list):
        raise ValueError("obstacles must be a list")
    obstacles = [_parse_obstacle(o, i) for i, o in enumerate(raw_obstacles)]

    lanes = _parse_lanes(payload["lanes"]) if "lanes" in payload else None
    sites = _parse_sites(payload["sites"]) if "sites" in payload else {}

    return make_environment(
        bounds,
        obstacles,
        lane_graph=lanes,
        sites=sites,
        name=str(payload.get("name", default_name)),
        cell_size=cell_size
    )

def load_environment(
    path: Path | str,
    *, cell_size: float=float(SDF_CONFIG["cell_size"])
) -> Environment:
    path = Path(path)
    payload = load_json_document(path, error_cls=EnvironmentFileError)

    try:
        return environment_from_dict(payload, cell_size=cell_size, default_name=path.stem)
    except ValueError as e:
        if isinstance(e, EnvironmentFileError):
            raise
        raise EnvironmentFileError(str(e), path=path) from e
