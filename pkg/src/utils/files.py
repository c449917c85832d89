from __future__ import annotations
from typing import Callable, TypeAlias
from pathlib import Path

import os
import tempfile

Logger:TypeAlias = Callable[[str], None]

def _void_logger(_: str) -> None:
    return

def is_file_non_empty(path: str | Path) -> bool:
    """
    Check if path is a file and non-empty.
    Returns False if file is missing, empty, or inaccessible.
    """
    p = Path(path)

    try:
        return p.exists() and p.is_file() and p.stat().st_size > 0
    except (PermissionError, OSError):
        return False

def write_text_atomic(
    path: str | Path,
    text: str,
    *,
    logger: Logger | None=None
) -> Path:
    """
    Write text through a sibling temp file and os.replace, so readers never
    observe a half-written file.
    """
    log = logger or _void_logger
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{p.name}.", suffix=".tmp", dir=p.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, p)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise

    log(f"Wrote {p}")
    return p
