"""
Measurement models for the pose, dynamics, obstacle and interrobot factors. Each model
linearizes a whole batch of rows at once.

States are [x, y, vx, vy]. Pairwise factors act on the stacked pair (n, 8).
"""
from __future__ import annotations
from dataclasses import dataclass, asdict, fields
from typing import Any

import numpy as np

from src.config import GBP_CONFIG, SIMULATION_CONFIG
from src.env.sdf import SdfGrid, sdf_at_many
from src.gbp.graph import Linearization

STATE_DIM = 4

HEADON_CONE = np.deg2rad(float(GBP_CONFIG["headon_cone_deg"]))
HEADON_DEFLECTION = np.deg2rad(float(GBP_CONFIG["headon_deflection_deg"]))

def _default(key: str) -> float:
    value = SIMULATION_CONFIG[key]
    return float(SIMULATION_CONFIG["robot_radius"] if value is None else value)

@dataclass(frozen=True)
class FactorParams:
    sigma_pose: float = _default("sigma_pose")
    sigma_dynamics: float = _default("sigma_dynamics")
    sigma_interrobot: float = _default("sigma_interrobot")
    sigma_obstacle: float = _default("sigma_obstacle")
    sigma_tracking: float = _default("sigma_tracking")
    d_i: float = _default("d_i")
    d_o: float = _default("d_o")            # unset in the config -> robot radius

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not (float(value) > 0.0):
                raise ValueError(f"FactorParams.{name} must be > 0, got {value}")

    @classmethod
    def from_dict(cls, cfg: dict[str, Any]) -> "FactorParams":
        """Overrides on top of SIMULATION_CONFIG; d_o falls back to robot_radius."""
        merged = {**SIMULATION_CONFIG, **cfg}
        if merged.get("d_o") is None:
            merged["d_o"] = merged["robot_radius"]
        return cls(**{f.name: float(merged[f.name]) for f in fields(cls)})


def transition_matrix(dt: float) -> np.ndarray:
    f = np.eye(STATE_DIM)
    f[0, 2] = dt
    f[1, 3] = dt
    return f

def interrobot_terms(
    x: np.ndarray,
    d_i: float,
    *,
    cone: float=HEADON_CONE,
    deflection: float=HEADON_DEFLECTION
) -> tuple[np.ndarray, np.ndarray]:
    """
    h = max(0, 1 - |p_a - p_b| / d_i) and its Jacobian (n, 8) over stacked pairs. Zero
    Jacobian at or beyond d_i and for coincident robots.

    When the pair closes within `cone` of the line between them, the repulsion
    direction is turned by `deflection` so that both robots move to their right.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 2 * STATE_DIM)
    n = x.shape[0]
    diff = x[:, 0:2] - x[:, 4:6]
    dist = np.hypot(diff[:, 0], diff[:, 1])

    h = np.maximum(0.0, 1.0 - dist / d_i)
    jac = np.zeros((n, 2 * STATE_DIM))

    live = (dist >= 1e-9) & (dist < d_i)
    if not np.any(live):
        return h, jac

    u = diff[live] / dist[live, None]

    if deflection > 0.0:
        w = x[live, 2:4] - x[live, 6:8]
        speed = np.hypot(w[:, 0], w[:, 1])
        closing = u[:, 0] * w[:, 0] + u[:, 1] * w[:, 1]
        cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
        headon = (closing < 0.0) & (np.abs(cross) <= np.sin(cone) * speed)

        c, s = np.cos(deflection), np.sin(deflection)
        turned = np.column_stack([c * u[:, 0] - s * u[:, 1], s * u[:, 0] + c * u[:, 1]])
        u = np.where(headon[:, None], turned, u)

    jac[live, 0:2] = -u / d_i
    jac[live, 4:6] = u / d_i
    return h, jac

def obstacle_terms(
    pos: np.ndarray,
    sdf: SdfGrid,
    d_o: float
) -> tuple[np.ndarray, np.ndarray]:
    """
    h = 1 - clip(sdf / d_o, 0, 1) (0 where the SDF is unbounded) and its Jacobian (n, 4).
    The gradient is a central difference of the SDF with a half-cell step and is zero
    outside the ramp 0 < sdf < d_o.
    """
    pos = np.asarray(pos, dtype=float).reshape(-1, 2)
    n = pos.shape[0]
    step = 0.5 * sdf.cell_size
    offsets = np.array([[0.0, 0.0], [step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]])

    values = sdf_at_many(sdf, (pos[:, None, :] + offsets[None]).reshape(-1, 2)).reshape(n, 5)
    dist = values[:, 0]
    finite = np.isfinite(dist)

    h = np.zeros(n)
    h[finite] = 1.0 - np.clip(dist[finite] / d_o, 0.0, 1.0)

    jac = np.zeros((n, STATE_DIM))
    ramp = finite & (dist > 0.0) & (dist < d_o)
    if np.any(ramp):
        v = values[ramp]
        jac[ramp, 0] = -(v[:, 1] - v[:, 2]) / (2.0 * step) / d_o
        jac[ramp, 1] = -(v[:, 3] - v[:, 4]) / (2.0 * step) / d_o
    return h, jac


class PoseModel:
    """h(x) = x; the anchor value is the row's z."""
    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        n = x.shape[0]
        return Linearization(x.copy(), np.broadcast_to(np.eye(STATE_DIM), (n, STATE_DIM, STATE_DIM)))


class DynamicsModel:
    """h(x_k, x_k+1) = x_k+1 - F(dt) x_k, constant velocity."""
    def __init__(self, dt: float):
        if dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.dt = float(dt)
        self.f = transition_matrix(self.dt)
        self.jac = np.hstack([-self.f, np.eye(STATE_DIM)])

    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        n = x.shape[0]
        h = x[:, STATE_DIM:] - x[:, :STATE_DIM] @ self.f.T
        return Linearization(h, np.broadcast_to(self.jac, (n,) + self.jac.shape))


class InterrobotModel:
    def __init__(
        self,
        d_i: float,
        *,
        cone: float=HEADON_CONE,
        deflection: float=HEADON_DEFLECTION
    ):
        if not (d_i > 0.0):
            raise ValueError(f"d_i must be > 0, got {d_i}")
        self.d_i = float(d_i)
        self.cone = float(cone)
        self.deflection = float(deflection)

    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        h, jac = interrobot_terms(x, self.d_i, cone=self.cone, deflection=self.deflection)
        return Linearization(h[:, None], jac[:, None, :])


class ObstacleModel:
    def __init__(self, sdf: SdfGrid, d_o: float):
        if not (d_o > 0.0):
            raise ValueError(f"d_o must be > 0, got {d_o}")
        self.sdf = sdf
        self.d_o = float(d_o)

    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        h, jac = obstacle_terms(x[:, 0:2], self.sdf, self.d_o)
        return Linearization(h[:, None], jac[:, None, :])


class LinearModel:
    """h(x) = A x; used for linear-Gaussian graphs."""
    def __init__(self, a: np.ndarray):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))

    def linearize(self, x: np.ndarray, data: dict[str, np.ndarray]) -> Linearization:
        n = x.shape[0]
        return Linearization(x @ self.a.T, np.broadcast_to(self.a, (n,) + self.a.shape))
