"""
MetricsRecord: the structured result of one run, plus per-gamma aggregation.
"""
from __future__ import annotations
from dataclasses import dataclass, field, asdict
from typing import Any, Iterable

import numpy as np

from src.config import METRICS_CONFIG
from src.schemas import Method, PlannerKind

CSV_COLUMNS: list[str] = list(METRICS_CONFIG["csv_columns"])

AGGREGATE_COLUMNS: list[str] = [
    "gamma", "runs", "failed_runs",
    "inter_robot_collisions_mean", "inter_robot_collisions_std",
    "environment_collisions_mean", "environment_collisions_std",
    "ppd_rmse_mean", "ppd_rmse_std",
]

@dataclass
class MetricsRecord:
    scenario: str
    seed: int
    gamma: float
    method: Method
    planner: PlannerKind
    inter_robot_collisions: int = 0
    environment_collisions: int = 0
    ppd_rmse_mean: float | None = None
    ppd_rmse_std: float | None = None
    per_robot: dict[str, dict[str, Any]] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    incomplete: bool = False
    error: str | None = None

    def __post_init__(self) -> None:
        self.method = Method(self.method)
        self.planner = PlannerKind(self.planner)
        if self.inter_robot_collisions < 0 or self.environment_collisions < 0:
            raise ValueError("collision counts must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["method"] = self.method.value
        out["planner"] = self.planner.value
        return out

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "MetricsRecord":
        return cls(**payload)

    def csv_row(self) -> dict[str, Any]:
        row = self.to_dict()
        return {c: row.get(c) for c in CSV_COLUMNS}


def rmse_summary(values: Iterable[float]) -> tuple[float | None, float | None]:
    """Mean and population std of per-robot RMSE values; (None, None) when empty."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return None, None
    return float(arr.mean()), float(arr.std())

def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())

def aggregate_by_gamma(records: Iterable[MetricsRecord]) -> list[dict[str, Any]]:
    """
    One row per gamma: mean/std across runs of each run-level value. Incomplete runs
    are counted in `failed_runs` and left out of the statistics.
    """
    groups: dict[float, list[MetricsRecord]] = {}
    for rec in records:
        groups.setdefault(float(rec.gamma), []).append(rec)

    rows: list[dict[str, Any]] = []
    for gamma in sorted(groups):
        recs = groups[gamma]
        ok = [r for r in recs if not r.incomplete]

        ir_mean, ir_std = _mean_std([float(r.inter_robot_collisions) for r in ok])
        env_mean, env_std = _mean_std([float(r.environment_collisions) for r in ok])
        ppd_mean, ppd_std = _mean_std([r.ppd_rmse_mean for r in ok if r.ppd_rmse_mean is not None])

        rows.append({
            "gamma": gamma,
            "runs": len(recs),
            "failed_runs": len(recs) - len(ok),
            "inter_robot_collisions_mean": ir_mean,
            "inter_robot_collisions_std": ir_std,
            "environment_collisions_mean": env_mean,
            "environment_collisions_std": env_std,
            "ppd_rmse_mean": ppd_mean,
            "ppd_rmse_std": ppd_std,
        })

    return rows
