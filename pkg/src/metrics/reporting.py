from __future__ import annotations
from typing import Any, Iterable

from src.metrics.record import MetricsRecord

def _fmt(value: float | None, digits: int=3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"

def summarize(records: Iterable[MetricsRecord]) -> str:
    results = list(records)
    total = len(results)
    failed = [r for r in results if r.incomplete]

    lines: list[str] = []
    lines.append(f"Runs: {total}")
    lines.append(f"Complete: {total - len(failed)}")
    lines.append("")

    for r in results:
        lines.append(
            f"- {r.scenario} seed={r.seed} gamma={r.gamma:.2f} {r.method.value}/{r.planner.value}: "
            f"robot-robot={r.inter_robot_collisions} robot-env={r.environment_collisions} "
            f"ppd={_fmt(r.ppd_rmse_mean)}+-{_fmt(r.ppd_rmse_std)}"
        )

    lines.append("")
    if failed:
        lines.append("Incomplete runs:")
        for r in failed:
            lines.append(f"- {r.scenario} seed={r.seed} gamma={r.gamma:.2f}: {r.error or 'unknown error'}")
    else:
        lines.append("Incomplete runs: none")

    return "\n".join(lines) + "\n"

def summarize_aggregates(rows: Iterable[dict[str, Any]]) -> str:
    lines = ["gamma  runs  robot-robot        robot-env          ppd_rmse"]
    for row in rows:
        lines.append(
            f"{row['gamma']:<6.2f} {row['runs']:<5d} "
            f"{_fmt(row['inter_robot_collisions_mean'], 2):>7}+-{_fmt(row['inter_robot_collisions_std'], 2):<8} "
            f"{_fmt(row['environment_collisions_mean'], 2):>7}+-{_fmt(row['environment_collisions_std'], 2):<8} "
            f"{_fmt(row['ppd_rmse_mean'])}+-{_fmt(row['ppd_rmse_std'])}"
        )
    return "\n".join(lines) + "\n"
