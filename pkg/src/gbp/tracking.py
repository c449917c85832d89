"""
Path-tracking factor: pulls a horizon variable toward, and along, the robot's
current global-path segment.

Segment i runs from waypoint p_i to p_{i+1}. Near a corner (condition q) the
measurement point is the midpoint between the projections onto the current and
previous segment; elsewhere it is the projection pushed forward along the segment
in proportion to speed.

The row functions work on n states at once; each row carries its own segment as
seg[r] = [p_{i-1}, p_i, p_{i+1}] and has_prev[r] = (i >= 1).
"""
from __future__ import annotations
from dataclasses import dataclass, replace

import numpy as np

from src.config import GBP_CONFIG, DEBUG_CONFIG
from src.errors import DegenerateSegmentError
from src.gbp.graph import Linearization
from src.planning.path import GlobalPath
from src.utils.diagnostics import build_debug_logger

H_MIN = float(GBP_CONFIG["h_min"])

_dbg_guard = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="gbp.tracking",
    key="print_guard"
)

@dataclass(frozen=True)
class TrackingContext:
    path: GlobalPath
    i: int
    r_switch: float
    s_v: float
    d_a: float

    def __post_init__(self) -> None:
        n = len(self.path.waypoints)
        if not (0 <= self.i <= n - 2):
            raise ValueError(f"Segment index {self.i} out of range for a path of {n} waypoints")
        for name in ("r_switch", "s_v", "d_a"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"TrackingContext.{name} must be > 0, got {getattr(self, name)}")

    @property
    def last_segment(self) -> int:
        return len(self.path.waypoints) - 2

    def waypoint(self, k: int) -> np.ndarray:
        return self.path.waypoints[k]

    def with_index(self, i: int) -> "TrackingContext":
        return replace(self, i=i)

    def segment(self) -> np.ndarray:
        """[p_{i-1}, p_i, p_{i+1}]; on the first segment p_{i-1} is a stand-in behind p_i."""
        p_i, p_next = self.waypoint(self.i), self.waypoint(self.i + 1)
        p_prev = self.waypoint(self.i - 1) if self.i >= 1 else 2.0 * p_i - p_next
        return np.stack([p_prev, p_i, p_next]).astype(float)

    def rows(self, n: int) -> dict[str, np.ndarray]:
        """Row data for n tracking factors on this segment."""
        return {
            "seg": np.repeat(self.segment()[None], n, axis=0),
            "has_prev": np.full(n, self.i >= 1),
        }


def project_onto_line(
    x: np.ndarray,
    p_i: np.ndarray,
    p_next: np.ndarray
) -> np.ndarray:
    """
    Projection onto the infinite line through p_i and p_next (not clamped).
    Broadcasts over leading dimensions.
    """
    x = np.asarray(x, dtype=float)
    p_i = np.asarray(p_i, dtype=float)
    seg = np.asarray(p_next, dtype=float) - p_i
    denom = np.sum(seg * seg, axis=-1)

    if np.any(denom <= 0.0):
        raise DegenerateSegmentError(f"Zero-length segment at {p_i.tolist()}")

    t = np.asarray(np.sum((x - p_i) * seg, axis=-1) / denom)
    return p_i + t[..., None] * seg

def _corner_terms(
    pos: np.ndarray,
    seg: np.ndarray,
    has_prev: np.ndarray,
    r_switch: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    corner = seg[:, 1]
    proj_cur = project_onto_line(pos, corner, seg[:, 2])
    proj_prev = project_onto_line(pos, seg[:, 0], corner)

    near = (
        has_prev
        & (np.linalg.norm(proj_cur - corner, axis=-1) < r_switch)
        & (np.linalg.norm(proj_prev - corner, axis=-1) < r_switch)
    )
    return near, proj_cur, proj_prev

def near_corner(
    pos: np.ndarray,
    seg: np.ndarray,
    has_prev: np.ndarray,
    r_switch: float
) -> np.ndarray:
    """Condition q per row: both projections within r_switch of p_i."""
    return _corner_terms(pos, seg, has_prev, r_switch)[0]

def measurement_points(
    x: np.ndarray,
    seg: np.ndarray,
    has_prev: np.ndarray,
    *,
    r_switch: float,
    s_v: float
) -> np.ndarray:
    pos, vel = x[:, 0:2], x[:, 2:4]
    p_i, p_next = seg[:, 1], seg[:, 2]
    near, proj_cur, proj_prev = _corner_terms(pos, seg, has_prev, r_switch)

    blend = pos + 0.5 * ((proj_cur - pos) - (proj_prev - pos))

    direction = (p_next - p_i) / np.linalg.norm(p_next - p_i, axis=-1, keepdims=True)
    lead = proj_cur + direction * (np.linalg.norm(vel, axis=-1, keepdims=True) / s_v)

    return np.where(near[:, None], blend, lead)

def tracking_terms(
    x: np.ndarray,
    seg: np.ndarray,
    has_prev: np.ndarray,
    *,
    r_switch: float,
    s_v: float,
    d_a: float,
    h_min: float=H_MIN
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    h = min(1, |x_pos - x_meas| / d_a) and the row [(x_meas - x)/h, (y_meas - y)/h, 0, 0]
    for n states. Returns (h (n,), jac (n, 4), guard (n,)); guarded rows (h < h_min,
    on the path) have a zero Jacobian.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 4)
    meas = measurement_points(x, seg, has_prev, r_switch=r_switch, s_v=s_v)
    gap = meas - x[:, 0:2]

    h = np.minimum(1.0, np.hypot(gap[:, 0], gap[:, 1]) / d_a)
    guard = h < h_min
    live = np.isfinite(h) & ~guard

    jac = np.zeros((x.shape[0], 4))
    jac[live, 0:2] = gap[live] / h[live, None]

    if np.any(guard):
        _dbg_guard(f"{int(np.count_nonzero(guard))} row(s) below guard, h_min={h_min:.1e}")

    return h, jac, guard

# single state against a TrackingContext

def transition_condition(x: np.ndarray, ctx: TrackingContext) -> bool:
    rows = ctx.rows(1)
    pos = np.asarray(x, dtype=float)[None, 0:2]
    return bool(near_corner(pos, rows["seg"], rows["has_prev"], ctx.r_switch)[0])

def advance_segment(x: np.ndarray, ctx: TrackingContext) -> int:
    """
    Next segment index: at most one step forward, never backward.
    """
    if ctx.i >= ctx.last_segment:
        return ctx.i

    if np.linalg.norm(np.asarray(x, dtype=float) - ctx.waypoint(ctx.i + 1)) < ctx.r_switch:
        return ctx.i + 1

    return ctx.i

def tracking_measurement_point(x: np.ndarray, ctx: TrackingContext) -> np.ndarray:
    rows = ctx.rows(1)
    return measurement_points(
        np.asarray(x, dtype=float).reshape(1, 4), rows["seg"], rows["has_prev"],
        r_switch=ctx.r_switch, s_v=ctx.s_v
    )[0]

def tracking_h(x: np.ndarray, ctx: TrackingContext) -> float:
    rows = ctx.rows(1)
    h, _, _ = tracking_terms(x, rows["seg"], rows["has_prev"], r_switch=ctx.r_switch, s_v=ctx.s_v, d_a=ctx.d_a)
    return float(h[0])

def tracking_jacobian(
    x: np.ndarray,
    ctx: TrackingContext,
    *, h_min: float=H_MIN
) -> np.ndarray | None:
    """(1, 4) Jacobian row; None when h < h_min (on path)."""
    rows = ctx.rows(1)
    _, jac, guard = tracking_terms(
        x, rows["seg"], rows["has_prev"],
        r_switch=ctx.r_switch, s_v=ctx.s_v, d_a=ctx.d_a, h_min=h_min
    )
    return None if guard[0] else jac


class TrackingModel:
    """
    Batch adapter. The Jacobian points toward the measurement point (it is the gradient
    of the attraction residual), so the factor linearizes -h against z = 0. Segments
    come from the rows' "seg"/"has_prev" data, rewritten by the owning robot whenever
    its segment index moves.
    """
    def __init__(
        self,
        *,
        r_switch: float,
        s_v: float,
        d_a: float,
        h_min: float=H_MIN
    ):
        self.r_switch = float(r_switch)
        self.s_v = float(s_v)
        self.d_a = float(d_a)
        self.h_min = float(h_min)

    @classmethod
    def for_context(cls, ctx: TrackingContext, *, h_min: float=H_MIN) -> "TrackingModel":
        return cls(r_switch=ctx.r_switch, s_v=ctx.s_v, d_a=ctx.d_a, h_min=h_min)

    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        h, jac, guard = tracking_terms(
            x, data["seg"], data["has_prev"],
            r_switch=self.r_switch, s_v=self.s_v, d_a=self.d_a, h_min=self.h_min
        )
        return Linearization(-h[:, None], jac[:, None, :], guard)
