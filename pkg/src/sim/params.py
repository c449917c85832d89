"""
Fully resolved simulation parameters.

SIMULATION_CONFIG supplies the defaults; a scenario's `params` block overrides them.
Knobs left as None are derived: r_switch = r_R, s_v = v_t, d_a = 2 r_R, d_o = r_R.
"""
from __future__ import annotations
from dataclasses import dataclass, asdict, fields
from typing import Any

from src.config import SIMULATION_CONFIG, GBP_CONFIG, SDF_CONFIG
from src.schemas import Schedule
from src.gbp.factors import FactorParams

@dataclass(frozen=True)
class SimParams:
    robot_radius: float
    comms_radius: float
    gamma: float
    target_speed: float
    horizon: float
    num_variables: int
    internal_iters: int
    external_iters: int
    dt_sim: float
    schedule: Schedule
    sigma_pose: float
    sigma_dynamics: float
    sigma_interrobot: float
    sigma_obstacle: float
    sigma_tracking: float
    r_switch: float
    s_v: float
    d_a: float
    d_i: float
    d_o: float
    clearance_margin: float
    duration: float
    damping: float
    cell_size: float

    def __post_init__(self) -> None:
        positive = (
            "robot_radius", "comms_radius", "target_speed", "horizon", "dt_sim",
            "sigma_pose", "sigma_dynamics", "sigma_interrobot", "sigma_obstacle", "sigma_tracking",
            "r_switch", "s_v", "d_a", "d_i", "d_o", "duration", "cell_size",
        )
        for name in positive:
            value = getattr(self, name)
            if not (value > 0.0):
                raise ValueError(f"{name} must be > 0, got {value}")

        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.num_variables < 3:
            raise ValueError(f"num_variables must be >= 3, got {self.num_variables}")
        if self.internal_iters < 0 or self.external_iters < 0:
            raise ValueError("internal_iters and external_iters must be >= 0")
        if self.clearance_margin < 0.0:
            raise ValueError(f"clearance_margin must be >= 0, got {self.clearance_margin}")
        if not (0.0 <= self.damping <= float(GBP_CONFIG["max_damping"])):
            raise ValueError(f"damping must be in [0, {GBP_CONFIG['max_damping']}], got {self.damping}")

    @property
    def dt(self) -> float:
        """Spacing between horizon variables."""
        return self.horizon / (self.num_variables - 1)

    @classmethod
    def from_dict(cls, overrides: dict[str, Any] | None=None) -> "SimParams":
        overrides = dict(overrides or {})
        allowed = {f.name for f in fields(cls)}

        unknown = sorted(set(overrides) - allowed)
        if unknown:
            raise ValueError(f"Unknown parameter(s) {unknown}")

        cfg = {
            **SIMULATION_CONFIG,
            "damping": GBP_CONFIG["damping"],
            "cell_size": SDF_CONFIG["cell_size"],
            **overrides,
        }

        r_r = float(cfg["robot_radius"])
        v_t = float(cfg["target_speed"])

        def _or(key: str, derived: float) -> float:
            value = cfg.get(key)
            return derived if value is None else float(value)

        try:
            schedule = Schedule(cfg["schedule"])
        except ValueError as e:
            raise ValueError(f"schedule must be one of {[s.value for s in Schedule]}, got {cfg['schedule']!r}") from e

        return cls(
            robot_radius=r_r,
            comms_radius=float(cfg["comms_radius"]),
            gamma=float(cfg["gamma"]),
            target_speed=v_t,
            horizon=float(cfg["horizon"]),
            num_variables=int(cfg["num_variables"]),
            internal_iters=int(cfg["internal_iters"]),
            external_iters=int(cfg["external_iters"]),
            dt_sim=float(cfg["dt_sim"]),
            schedule=schedule,
            sigma_pose=float(cfg["sigma_pose"]),
            sigma_dynamics=float(cfg["sigma_dynamics"]),
            sigma_interrobot=float(cfg["sigma_interrobot"]),
            sigma_obstacle=float(cfg["sigma_obstacle"]),
            sigma_tracking=float(cfg["sigma_tracking"]),
            r_switch=_or("r_switch", r_r),
            s_v=_or("s_v", v_t),
            d_a=_or("d_a", 2.0 * r_r),
            d_i=float(cfg["d_i"]),
            d_o=_or("d_o", r_r),
            clearance_margin=float(cfg["clearance_margin"]),
            duration=float(cfg["duration"]),
            damping=float(cfg["damping"]),
            cell_size=float(cfg["cell_size"]),
        )

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["schedule"] = self.schedule.value
        out["dt"] = self.dt
        return out

    def factor_params(self) -> FactorParams:
        return FactorParams(
            sigma_pose=self.sigma_pose,
            sigma_dynamics=self.sigma_dynamics,
            sigma_interrobot=self.sigma_interrobot,
            sigma_obstacle=self.sigma_obstacle,
            sigma_tracking=self.sigma_tracking,
            d_i=self.d_i,
            d_o=self.d_o
        )
