"""
Communication-failure sweep: |gammas| x runs seeded simulations of one base scenario.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Iterator, Sequence

from tqdm import tqdm

from src.config import DEBUG_CONFIG
from src.env.environment import Environment, load_environment
from src.metrics.record import MetricsRecord, aggregate_by_gamma
from src.sim.rng import derive_seed
from src.sim.runner import SimulationOutput, simulate
from src.sim.scenario import ScenarioSpec
from src.utils.diagnostics import build_debug_logger

_dbg_runs = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="sim.sweep",
    key="print_runs"
)

@dataclass
class SweepRun:
    gamma_index: int
    run_index: int
    gamma: float
    seed: int
    output: SimulationOutput

    @property
    def record(self) -> MetricsRecord:
        return self.output.record

    @property
    def label(self) -> str:
        return f"gamma{self.gamma:.2f}_run{self.run_index}"


def sweep_seeds(base_seed: int, n_gammas: int, runs: int) -> list[list[int]]:
    """seeds[g][r] derived from (base seed, gamma index, run index)."""
    return [[derive_seed(base_seed, g, r) for r in range(runs)] for g in range(n_gammas)]

def validate_gammas(gammas: Sequence[float]) -> list[float]:
    values = [float(g) for g in gammas]
    if not values:
        raise ValueError("gamma list is empty")
    for g in values:
        if not (0.0 <= g <= 1.0):
            raise ValueError(f"gamma values must be in [0, 1], got {g}")
    return values

def iter_sweep(
    base: ScenarioSpec,
    gammas: Sequence[float],
    runs: int,
    *,
    threads: int | None=1,
    env: Environment | None=None,
    progress: bool=False
) -> Iterator[SweepRun]:
    gammas = validate_gammas(gammas)
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")

    env = env or load_environment(base.environment, cell_size=base.params.cell_size)
    seeds = sweep_seeds(base.resolved_seed(), len(gammas), runs)
    plan = [(g, r) for g in range(len(gammas)) for r in range(runs)]

    for g, r in tqdm(plan, desc=f"sweep {base.name}", disable=not progress):
        spec = base.with_overrides(gamma=gammas[g], seed=seeds[g][r])
        output = simulate(spec, threads=threads, env=env)
        _dbg_runs(
            f"gamma={gammas[g]:.2f} run={r} seed={seeds[g][r]} "
            f"collisions={output.record.inter_robot_collisions}/{output.record.environment_collisions} "
            f"ppd={output.record.ppd_rmse_mean}"
        )
        yield SweepRun(g, r, gammas[g], seeds[g][r], output)

def failure_sweep(
    base: ScenarioSpec,
    gammas: Sequence[float],
    runs: int,
    *,
    threads: int | None=1,
    env: Environment | None=None
) -> tuple[list[MetricsRecord], list[dict]]:
    """Per-run records (gamma-major order) and per-gamma aggregate rows."""
    records = [run.record for run in iter_sweep(base, gammas, runs, threads=threads, env=env)]
    return records, aggregate_by_gamma(records)
