"""
Per-robot lifecycle: path planning, the horizon chain inside a (possibly shared)
FactorGraph, waypoint/segment bookkeeping for WT and PT, and the per-timestep state
update.

Horizon variable k sits k * dt seconds ahead of the robot. Variable 0 is anchored at
the current state; variable K-1 is anchored on the way to the current target. A robot
that finishes or faults leaves the graph and keeps a frozen copy of its last state.
"""
from __future__ import annotations
from collections import Counter

import numpy as np

from src.config import DEBUG_CONFIG
from src.schemas import FactorKind, Method, PlannerKind, RobotStatus
from src.env.environment import Environment
from src.gbp.factors import DynamicsModel, ObstacleModel, PoseModel
from src.gbp.graph import FactorBatch, FactorGraph, factor_update, variable_update, iterate_internal
from src.gbp.tracking import TrackingContext, TrackingModel, advance_segment
from src.planning.path import GlobalPath
from src.planning.planner import plan_path
from src.planning.rrt_star import RrtStarParams
from src.planning.simplify import simplify_path
from src.sim.params import SimParams
from src.utils.diagnostics import build_debug_logger

_dbg_waypoints = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="robots.robot",
    key="print_waypoints"
)
_dbg_faults = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="robots.robot",
    key="print_faults"
)

def horizon_anchor(
    position: np.ndarray,
    target: np.ndarray,
    *,
    speed: float,
    horizon: float
) -> np.ndarray:
    """
    State for the horizon-end anchor: on the ray toward `target` at distance
    min(speed * horizon, distance to target); velocity `speed` along the ray while the
    target is out of reach, zero once the anchor sits on it.
    """
    gap = np.asarray(target, dtype=float) - np.asarray(position, dtype=float)
    dist = float(np.linalg.norm(gap))
    reach = speed * horizon

    if dist <= reach or dist == 0.0:
        return np.concatenate([np.asarray(target, dtype=float), np.zeros(2)])

    u = gap / dist
    return np.concatenate([position + u * reach, speed * u])


class Robot:
    def __init__(
        self,
        robot_id: int,
        path: GlobalPath,
        env: Environment,
        params: SimParams,
        method: Method,
        *,
        graph: FactorGraph | None=None
    ):
        self.id = int(robot_id)
        self.path = path
        self.env = env
        self.params = params
        self.factor_params = params.factor_params()
        self.method = Method(method)
        self.radius = params.robot_radius
        self.status = RobotStatus.ACTIVE
        self.diagnostics: Counter = Counter()

        self.waypoint_index = 1         # WT: current target w_j
        self.segment_index = 0          # PT: current segment i

        self.graph = graph if graph is not None else FactorGraph(damping=params.damping)
        self._frozen: np.ndarray | None = None
        self._build_graph()

    @property
    def num_variables(self) -> int:
        return self.params.num_variables

    @property
    def vars(self) -> slice:
        """This robot's rows in graph.lin; empty once it has left the graph."""
        return self.graph.span(self.id)

    @property
    def in_graph(self) -> bool:
        return self._frozen is None

    @property
    def horizon_means(self) -> np.ndarray:
        if self._frozen is not None:
            return self._frozen.copy()
        return self.graph.lin[self.vars].copy()

    @property
    def state(self) -> np.ndarray:
        if self._frozen is not None:
            return self._frozen[0].copy()
        return self.graph.lin[self.vars.start].copy()

    @property
    def position(self) -> np.ndarray:
        return self.state[0:2]

    @property
    def is_active(self) -> bool:
        return self.status == RobotStatus.ACTIVE

    @property
    def target(self) -> np.ndarray:
        if self.method == Method.WT:
            return self.path.waypoints[self.waypoint_index]
        return self.path.waypoints[self.segment_index + 1]

    @property
    def on_final_target(self) -> bool:
        n = len(self.path)
        if self.method == Method.WT:
            return self.waypoint_index == n - 1
        return self.segment_index == n - 2

    def tracking_context(self) -> TrackingContext:
        return TrackingContext(
            path=self.path,
            i=self.segment_index,
            r_switch=self.params.r_switch,
            s_v=self.params.s_v,
            d_a=self.params.d_a
        )

    def batch(self, name: str) -> FactorBatch:
        return self.graph.batches[name]

    def _build_graph(self) -> None:
        p = self.params
        fp = self.factor_params
        k_vars = p.num_variables
        start = self.path.start
        first = self.path.waypoints[1]
        u = (first - start) / np.linalg.norm(first - start)

        offsets = np.arange(k_vars) * p.dt
        lin = np.column_stack([
            start[None, :] + u[None, :] * (p.target_speed * offsets[:, None]),
            np.broadcast_to(p.target_speed * u, (k_vars, 2)),
        ])
        span = self.graph.add_variables(self.id, lin, timestep_offsets=offsets)
        b = span.start

        current = lin[0]
        end_state = horizon_anchor(current[0:2], self.target, speed=p.target_speed, horizon=p.horizon)
        self.graph.ensure_batch("pose", FactorKind.POSE, PoseModel(), arity=1).append(
            self.id, [[b], [b + k_vars - 1]],
            sigma=fp.sigma_pose, data={"z": np.stack([current, end_state])}
        )

        k = np.arange(k_vars - 1)
        self.graph.ensure_batch("dyn", FactorKind.DYNAMICS, DynamicsModel(p.dt), arity=2).append(
            self.id, np.column_stack([b + k, b + k + 1]), sigma=fp.sigma_dynamics
        )

        self.graph.ensure_batch("obs", FactorKind.OBSTACLE, ObstacleModel(self.env.sdf, fp.d_o), arity=1).append(
            self.id, b + np.arange(k_vars), sigma=fp.sigma_obstacle
        )

        if self.method == Method.PT:
            ctx = self.tracking_context()
            self.graph.ensure_batch("trk", FactorKind.TRACKING, TrackingModel.for_context(ctx), arity=1).append(
                self.id, b + np.arange(1, k_vars - 1),
                sigma=fp.sigma_tracking, data=ctx.rows(k_vars - 2)
            )

        self.graph.check_chain(self.id)

    def _pose_rows(self) -> slice:
        return self.batch("pose").rows_of(self.id)

    @property
    def start_anchor(self) -> np.ndarray:
        """z of the current-state anchor."""
        return self.batch("pose").data["z"][self._pose_rows().start]

    @property
    def end_anchor(self) -> np.ndarray:
        return self.batch("pose").data["z"][self._pose_rows().stop - 1]

    def iterate_internal(self, n: int=1) -> None:
        """n internal rounds over the whole graph this robot lives in."""
        if self.is_active and self.in_graph:
            iterate_internal(self.graph, n)

    def update_variables(self) -> None:
        if self.is_active and self.in_graph:
            variable_update(self.graph)

    def reanchor(self, state: np.ndarray, *, refresh: bool=True) -> None:
        """
        Pin variable 0 to `state` and move the horizon-end anchor toward the current
        target. With refresh=False only the anchor values and linearization points are
        written; refresh_anchors() then sends the new messages for many robots at once.
        """
        p = self.params
        state = np.asarray(state, dtype=float)
        end_state = horizon_anchor(state[0:2], self.target, speed=p.target_speed, horizon=p.horizon)

        rows = self._pose_rows()
        z = self.batch("pose").data["z"]
        z[rows.start] = state
        z[rows.stop - 1] = end_state

        span = self.vars
        self.graph.lin[span.start] = state
        self.graph.lin[span.stop - 1] = end_state

        if refresh:
            refresh_anchors(self.graph, rows)

    def detach(self) -> None:
        """Freeze the current horizon and leave the shared graph."""
        if self._frozen is not None:
            return
        self._frozen = self.graph.lin[self.vars].copy()
        self.graph.remove_owner(self.id)

    def fault(self, reason: str) -> None:
        self.status = RobotStatus.FAULTED
        self.diagnostics["faulted"] += 1
        _dbg_faults(f"robot {self.id} faulted: {reason}")
        self.detach()

    def diagnostics_counter(self) -> Counter:
        return Counter(self.diagnostics)

    def __repr__(self) -> str:
        return f"Robot(id={self.id}, method={self.method.value}, status={self.status.value}, pos={np.round(self.position, 3).tolist()})"


def refresh_anchors(graph: FactorGraph, rows: slice | None=None) -> None:
    """
    Resend the pose-anchor messages of `rows` (default all) undamped and move the
    anchored variables to their new beliefs.
    """
    pose = graph.batches.get("pose")
    if pose is None or not len(pose):
        return
    sel = slice(None) if rows is None else rows
    factor_update(graph, pose, rows=sel, damping=0.0)
    variable_update(graph, which=pose.var_idx[sel].ravel())


def plan_robot_path(
    start: np.ndarray,
    goal: np.ndarray,
    env: Environment,
    params: SimParams,
    *,
    method: Method,
    planner: PlannerKind,
    rng: np.random.Generator | None=None,
    rrt_params: RrtStarParams | None=None,
    simplify: bool=False,
    waypoints: list[list[float]] | None=None
) -> GlobalPath:
    """
    Global path for one robot; WT paths are optionally simplified. PlanningFailedError
    propagates.
    """
    path = plan_path(
        env, np.asarray(start, dtype=float), np.asarray(goal, dtype=float), planner,
        robot_radius=params.robot_radius,
        clearance_margin=params.clearance_margin,
        rng=rng,
        rrt_params=rrt_params,
        waypoints=waypoints
    )

    if simplify and Method(method) == Method.WT:
        path = simplify_path(path, env, clearance=params.robot_radius)

    return path

def spawn_robot(
    robot_id: int,
    start: np.ndarray,
    goal: np.ndarray,
    env: Environment,
    params: SimParams,
    *,
    method: Method,
    planner: PlannerKind,
    graph: FactorGraph | None=None,
    rng: np.random.Generator | None=None,
    rrt_params: RrtStarParams | None=None,
    simplify: bool=False,
    waypoints: list[list[float]] | None=None
) -> Robot:
    path = plan_robot_path(
        start, goal, env, params,
        method=method,
        planner=planner,
        rng=rng,
        rrt_params=rrt_params,
        simplify=simplify,
        waypoints=waypoints
    )
    return Robot(robot_id, path, env, params, Method(method), graph=graph)


def advance_waypoint_wt(robot: Robot) -> bool:
    """
    WT only: move to the next waypoint once the horizon end is within r_switch of it.
    Returns True when the index advanced.
    """
    if robot.method != Method.WT:
        raise ValueError(f"advance_waypoint_wt needs a WT robot, robot {robot.id} is {robot.method.value}")

    if robot.on_final_target:
        return False

    end = robot.horizon_means[-1, 0:2]
    if np.linalg.norm(end - robot.target) < robot.params.r_switch:
        robot.waypoint_index += 1
        _dbg_waypoints(f"robot {robot.id} -> waypoint {robot.waypoint_index}")
        return True

    return False

def advance_segment_pt(robot: Robot) -> bool:
    if robot.method != Method.PT:
        raise ValueError(f"advance_segment_pt needs a PT robot, robot {robot.id} is {robot.method.value}")

    ctx = robot.tracking_context()
    new_index = advance_segment(robot.position, ctx)
    if new_index == robot.segment_index:
        return False

    robot.segment_index = new_index
    if robot.in_graph:
        trk = robot.batch("trk")
        rows = trk.rows_of(robot.id)
        for key, value in ctx.with_index(new_index).rows(rows.stop - rows.start).items():
            trk.data[key][rows] = value
    _dbg_waypoints(f"robot {robot.id} -> segment {new_index}")
    return True

def step_robot(robot: Robot, dt_sim: float, *, refresh: bool=True) -> None:
    """
    Move the robot dt_sim along its planned horizon (constant-velocity interpolation
    between variables 0 and 1), shift the horizon forward, re-anchor, then update the
    waypoint/segment index. A non-finite plan faults and freezes the robot.
    """
    if not robot.is_active:
        return

    lin = robot.horizon_means
    if not np.all(np.isfinite(lin)):
        robot.fault("non-finite horizon mean")
        return

    alpha = min(1.0, dt_sim / robot.params.dt)
    new_state = lin[0] + alpha * (lin[1] - lin[0])

    span = robot.vars
    robot.graph.lin[span.start + 1:span.stop - 1] = lin[1:-1] + alpha * (lin[2:] - lin[1:-1])

    if robot.method == Method.WT:
        advance_waypoint_wt(robot)

    robot.reanchor(new_state, refresh=False)

    if robot.method == Method.PT and advance_segment_pt(robot):
        robot.reanchor(new_state, refresh=False)

    if refresh:
        refresh_anchors(robot.graph, robot._pose_rows())

    if robot.on_final_target and np.linalg.norm(robot.position - robot.path.goal) < robot.params.r_switch:
        robot.status = RobotStatus.FINISHED
