"""
ScenarioSpec and its strict file parser.

File shape:
{
  "name": "junction_pt",
  "environment": "junction.json",          # relative to the scenario file, else data/environments/
  "method": "PT",                           # WT | PT
  "planner": "structured",                  # rrt_star | structured | manual
  "spawn": {"model": "junction-random-sides", "count": 60, "rate": 4.0}
        or {"model": "fixed-list", "robots": [{"start": [x, y], "goal": [x, y], "time": 0.0, "waypoints": [...]}]},
  "params": {...SimParams overrides...},
  "rrt_star": {...RrtStarParams overrides...},
  "simplify": false,
  "ppd_literal": false,
  "seed": 7
}
"""
from __future__ import annotations
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any
import os

from src.config import (
    PROJECT_ROOT, ENVIRONMENTS_DIR, PLANNER_CONFIG, METRICS_CONFIG, SPAWN_CONFIG,
    SEED_ENV_VAR, RANDOM_STATE
)
from src.errors import ScenarioFileError
from src.schemas import Method, PlannerKind, SpawnModel
from src.planning.rrt_star import RrtStarParams
from src.sim.params import SimParams
from src.utils.artifacts import load_json_document

_TOP_LEVEL_KEYS = {
    "name", "environment", "method", "planner", "spawn", "params",
    "rrt_star", "simplify", "ppd_literal", "seed",
}
_SPAWN_KEYS = {"model", "count", "rate", "robots"}
_ROBOT_KEYS = {"start", "goal", "time", "waypoints"}

@dataclass(frozen=True)
class FixedRobot:
    start: tuple[float, float]
    goal: tuple[float, float]
    time: float = 0.0
    waypoints: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class SpawnSpec:
    model: SpawnModel
    count: int = int(SPAWN_CONFIG["count"])
    rate: float = float(SPAWN_CONFIG["rate"])
    robots: tuple[FixedRobot, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"model": self.model.value}
        if self.model == SpawnModel.JUNCTION_RANDOM_SIDES:
            out.update(count=self.count, rate=self.rate)
        else:
            out["robots"] = [
                {
                    "start": list(r.start),
                    "goal": list(r.goal),
                    "time": r.time,
                    "waypoints": None if r.waypoints is None else [list(p) for p in r.waypoints],
                }
                for r in self.robots
            ]
        return out


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    environment: Path
    method: Method
    planner: PlannerKind
    spawn: SpawnSpec
    params: SimParams
    rrt_params: RrtStarParams = field(default_factory=RrtStarParams.from_dict)
    simplify: bool = bool(PLANNER_CONFIG["simplify"])
    ppd_literal: bool = bool(METRICS_CONFIG["ppd_literal"])
    seed: int | None = None

    def with_overrides(
        self,
        *,
        seed: int | None=None,
        gamma: float | None=None,
        simplify: bool | None=None,
        ppd_literal: bool | None=None
    ) -> "ScenarioSpec":
        spec = self
        if seed is not None:
            spec = replace(spec, seed=int(seed))
        if gamma is not None:
            spec = replace(spec, params=replace(spec.params, gamma=float(gamma)))
        if simplify is not None:
            spec = replace(spec, simplify=bool(simplify))
        if ppd_literal is not None:
            spec = replace(spec, ppd_literal=bool(ppd_literal))
        return spec

    def resolved_seed(self) -> int:
        """Scenario seed, else $GBP_SIM_SEED, else RANDOM_STATE."""
        if self.seed is not None:
            return int(self.seed)
        return resolve_env_seed()

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "environment": _display_path(self.environment),
            "method": self.method.value,
            "planner": self.planner.value,
            "spawn": self.spawn.to_dict(),
            "params": self.params.to_dict(),
            "rrt_star": {
                "step": self.rrt_params.step,
                "max_iters": self.rrt_params.max_iters,
                "goal_bias": self.rrt_params.goal_bias,
                "rewire_gamma": self.rrt_params.rewire_gamma,
            },
            "simplify": self.simplify,
            "ppd_literal": self.ppd_literal,
        }


def _display_path(path: Path) -> str:
    try:
        return path.resolve().relative_to(PROJECT_ROOT).as_posix()
    except ValueError:
        return str(path)

def resolve_env_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return RANDOM_STATE
    try:
        return int(raw)
    except ValueError as e:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e


def _reject_unknown(obj: dict[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {unknown}; allowed {sorted(allowed)}")

def _pair(value: Any, where: str) -> tuple[float, float]:
    if (
        not isinstance(value, list) or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ValueError(f"{where} must be a [x, y] pair of numbers, got {value!r}")
    return (float(value[0]), float(value[1]))

def _parse_fixed_robot(obj: Any, i: int) -> FixedRobot:
    where = f"spawn.robots[{i}]"
    if not isinstance(obj, dict):
        raise ValueError(f"{where} must be an object")
    _reject_unknown(obj, _ROBOT_KEYS, where)

    waypoints = obj.get("waypoints")
    if waypoints is not None:
        if not isinstance(waypoints, list) or len(waypoints) < 2:
            raise ValueError(f"{where}.waypoints must list at least 2 points")
        waypoints = tuple(_pair(p, f"{where}.waypoints[{k}]") for k, p in enumerate(waypoints))

    time = obj.get("time", 0.0)
    if isinstance(time, bool) or not isinstance(time, (int, float)) or time < 0:
        raise ValueError(f"{where}.time must be a number >= 0, got {time!r}")

    return FixedRobot(
        start=_pair(obj.get("start"), f"{where}.start"),
        goal=_pair(obj.get("goal"), f"{where}.goal"),
        time=float(time),
        waypoints=waypoints
    )

def _parse_spawn(obj: Any) -> SpawnSpec:
    if not isinstance(obj, dict):
        raise ValueError("spawn must be an object")
    _reject_unknown(obj, _SPAWN_KEYS, "spawn")

    try:
        model = SpawnModel(obj.get("model"))
    except ValueError as e:
        raise ValueError(f"spawn.model must be one of {[m.value for m in SpawnModel]}, got {obj.get('model')!r}") from e

    match model:
        case SpawnModel.JUNCTION_RANDOM_SIDES:
            if "robots" in obj:
                raise ValueError("spawn.robots is only valid for the fixed-list model")
            count = obj.get("count", SPAWN_CONFIG["count"])
            rate = obj.get("rate", SPAWN_CONFIG["rate"])
            if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                raise ValueError(f"spawn.count must be an int >= 0, got {count!r}")
            if isinstance(rate, bool) or not isinstance(rate, (int, float)) or not rate > 0:
                raise ValueError(f"spawn.rate must be > 0, got {rate!r}")
            return SpawnSpec(model=model, count=count, rate=float(rate))

        case SpawnModel.FIXED_LIST:
            if "count" in obj or "rate" in obj:
                raise ValueError("spawn.count/spawn.rate are only valid for junction-random-sides")
            robots = obj.get("robots", [])
            if not isinstance(robots, list):
                raise ValueError("spawn.robots must be a list")
            fixed = tuple(_parse_fixed_robot(r, i) for i, r in enumerate(robots))
            return SpawnSpec(model=model, count=len(fixed), robots=fixed)

def _resolve_environment(value: Any, base_dir: Path | None) -> Path:
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"environment must be a file path, got {value!r}")

    candidate = Path(value)
    if candidate.is_absolute():
        return candidate
    if base_dir is not None and (base_dir / candidate).exists():
        return (base_dir / candidate).resolve()
    return (ENVIRONMENTS_DIR / candidate).resolve()

def scenario_from_dict(
    payload: Any,
    *,
    base_dir: Path | None=None,
    default_name: str="scenario"
) -> ScenarioSpec:
    if not isinstance(payload, dict):
        raise ValueError("Scenario file must contain a JSON object")
    _reject_unknown(payload, _TOP_LEVEL_KEYS, "scenario")

    if "environment" not in payload:
        raise ValueError("Missing required field: environment")
    if "spawn" not in payload:
        raise ValueError("Missing required field: spawn")

    try:
        method = Method(payload.get("method", "PT"))
    except ValueError as e:
        raise ValueError(f"method must be WT or PT, got {payload.get('method')!r}") from e

    try:
        planner = PlannerKind(payload.get("planner", "rrt_star"))
    except ValueError as e:
        raise ValueError(f"planner must be one of {[p.value for p in PlannerKind]}, got {payload.get('planner')!r}") from e

    params_raw = payload.get("params", {})
    rrt_raw = payload.get("rrt_star", {})
    if not isinstance(params_raw, dict):
        raise ValueError("params must be an object")
    if not isinstance(rrt_raw, dict):
        raise ValueError("rrt_star must be an object")
    _reject_unknown(rrt_raw, set(PLANNER_CONFIG["rrt_star"]), "rrt_star")

    seed = payload.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ValueError(f"seed must be an int, got {seed!r}")

    for flag in ("simplify", "ppd_literal"):
        if flag in payload and not isinstance(payload[flag], bool):
            raise ValueError(f"{flag} must be true/false, got {payload[flag]!r}")

    spawn = _parse_spawn(payload["spawn"])
    if planner == PlannerKind.MANUAL and spawn.model != SpawnModel.FIXED_LIST:
        raise ValueError("planner 'manual' needs the fixed-list spawn model")

    return ScenarioSpec(
        name=str(payload.get("name", default_name)),
        environment=_resolve_environment(payload["environment"], base_dir),
        method=method,
        planner=planner,
        spawn=spawn,
        params=SimParams.from_dict(params_raw),
        rrt_params=RrtStarParams.from_dict(rrt_raw),
        simplify=bool(payload.get("simplify", PLANNER_CONFIG["simplify"])),
        ppd_literal=bool(payload.get("ppd_literal", METRICS_CONFIG["ppd_literal"])),
        seed=seed
    )

def load_scenario(path: Path | str) -> ScenarioSpec:
    path = Path(path)
    payload = load_json_document(path, error_cls=ScenarioFileError)

    try:
        return scenario_from_dict(payload, base_dir=path.parent, default_name=path.stem)
    except ValueError as e:
        if isinstance(e, ScenarioFileError):
            raise
        raise ScenarioFileError(str(e), path=path) from e
