"""
Structured planner: A* over the directed lane graph.
"""
from __future__ import annotations
import heapq

import numpy as np

from src.config import PLANNER_CONFIG
from src.errors import PlanningFailedError
from src.schemas import PlannerKind
from src.env.environment import LaneGraph
from src.planning.path import GlobalPath

SNAP_RADIUS = float(PLANNER_CONFIG["structured"]["snap_radius"])

def snap_to_lane(
    graph: LaneGraph,
    point: np.ndarray,
    *, snap_radius: float=SNAP_RADIUS
) -> int:
    node, dist = graph.nearest_node(point)
    if dist > snap_radius:
        raise PlanningFailedError(
            f"{np.asarray(point).tolist()} is {dist:.2f} m from the nearest lane node (snap radius {snap_radius})"
        )
    return node

def astar_route(graph: LaneGraph, source: int, target: int) -> tuple[list[int], float]:
    """
    Minimum-length node sequence respecting edge directions. Euclidean heuristic;
    equal priorities pop the smaller node index first.
    """
    goal = graph.nodes[target]

    def heuristic(node: int) -> float:
        return float(np.linalg.norm(graph.nodes[node] - goal))

    queue: list[tuple[float, int, float]] = [(heuristic(source), source, 0.0)]
    best_g: dict[int, float] = {source: 0.0}
    parent: dict[int, int | None] = {source: None}
    closed: set[int] = set()

    while queue:
        _, node, g = heapq.heappop(queue)

        if node in closed:
            continue
        if node == target:
            route = [node]
            while parent[route[-1]] is not None:
                route.append(parent[route[-1]])
            return route[::-1], g

        closed.add(node)

        for edge in graph.successors(node):
            nxt = edge.target
            if nxt in closed:
                continue

            cost = g + edge.length
            if cost < best_g.get(nxt, np.inf):
                best_g[nxt] = cost
                parent[nxt] = node
                heapq.heappush(queue, (cost + heuristic(nxt), nxt, cost))

    raise PlanningFailedError(f"Lane node {target} is unreachable from {source} along lane directions")

def astar_lanes(
    graph: LaneGraph,
    start: np.ndarray,
    goal: np.ndarray,
    *, snap_radius: float=SNAP_RADIUS
) -> GlobalPath:
    """
    Snap start/goal to their nearest lane nodes and route between them. Off-node
    start/goal points are kept as the first/last waypoint.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)

    source = snap_to_lane(graph, start, snap_radius=snap_radius)
    target = snap_to_lane(graph, goal, snap_radius=snap_radius)

    if source == target:
        raise PlanningFailedError(f"Start and goal snap to the same lane node {source}")

    route, _ = astar_route(graph, source, target)
    points = [start] + [graph.nodes[k] for k in route] + [goal]

    return GlobalPath.from_points(points, PlannerKind.STRUCTURED)
