from typing import Iterable
from pathlib import Path

from src.config import REQUIRED_DIRS

def ensure_required_dirs(dirs: Iterable[str | Path]) -> None:
    """
    Ensure required directories exist:
    """
    for d in dirs:
        Path(d).mkdir(parents=True, exist_ok=True)

def ensure_project_dirs() -> None:
    """
    Ensure all required project directories exist.
    Call at application startup (scripts, CLI entrypoints).
    """
    ensure_required_dirs(REQUIRED_DIRS)

def check_output_dir_ready(
    path: str | Path,
    *, hint: str | None=None
) -> Path:
    """
    Create the output directory if absent; fail if the path exists but is not a directory.
    """
    p = Path(path)

    hint_msg = f"\nHint: {hint}" if hint else ""

    if p.exists() and not p.is_dir():
        raise RuntimeError(f"{p} is not a directory.{hint_msg}")

    p.mkdir(parents=True, exist_ok=True)
    return p

def check_run_dir_ready(path: str | Path) -> Path:
    """
    A replayable run directory must hold record.json, paths.json and trajectories.csv.
    """
    p = Path(path)
    if not p.is_dir():
        raise RuntimeError(f"{p} is not a directory.\nHint: Run: python scripts/gbp_sim.py run <scenario> --out {p}")

    for name in ("record.json", "paths.json", "trajectories.csv"):
        if not (p / name).exists():
            raise RuntimeError(f"Run directory is missing {name}: {p}")

    return p
