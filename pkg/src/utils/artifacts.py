from typing import Any, Iterable, Sequence
from pathlib import Path
from enum import Enum

from src.config import DEBUG_CONFIG
from src.utils.files import is_file_non_empty, write_text_atomic
from src.utils.diagnostics import build_debug_logger

import csv
import io
import json

import numpy as np

_fs_logger = build_debug_logger(
    cfg=DEBUG_CONFIG,
    domain_path="fs",
    key="log_writes"
)

def _json_default(obj: Any) -> Any:
    """
    Path / Enum / numpy scalars and arrays are not JSON serializable as-is.
    """
    if isinstance(obj, Path):
        return str(obj)

    if isinstance(obj, Enum):
        return obj.value

    if isinstance(obj, np.generic):
        return obj.item()

    if isinstance(obj, np.ndarray):
        return obj.tolist()

    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")

def dumps_json(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default) + "\n"

def save_json(
    path: Path | str,
    payload: Any,
    overwrite: bool=True
) -> Path:
    path = Path(path)

    if path.exists() and not overwrite:
        raise FileExistsError(f"File already exists: {path}. Set overwrite=True to overwrite.")

    return write_text_atomic(path, dumps_json(payload), logger=_fs_logger)

def load_json(path: Path | str) -> Any:
    path = Path(path)

    if not is_file_non_empty(path):
        raise FileNotFoundError(path)

    return json.loads(path.read_text(encoding="utf-8"))

def save_jsonl(
    path: Path | str,
    rows: Iterable[dict[str, Any]]
) -> Path:
    lines = [
        json.dumps(row, ensure_ascii=False, sort_keys=True, default=_json_default)
        for row in rows
    ]
    text = "\n".join(lines) + ("\n" if lines else "")

    return write_text_atomic(path, text, logger=_fs_logger)

def load_jsonl(path: Path | str) -> list[dict[str, Any]]:
    path = Path(path)

    if not is_file_non_empty(path):
        raise FileNotFoundError(path)

    rows: list[dict[str, Any]] = []

    with path.open("r", encoding="utf-8") as file:
        for i, line in enumerate(file, start=1):
            line = line.strip()

            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"Invalid JSON at {path}:{i}: {e}") from e
            if not isinstance(obj, dict):
                raise ValueError(f"Each line must be a JSON object at {path}:{i}")
            rows.append(obj)
    return rows

def save_csv(
    path: Path | str,
    columns: Sequence[str],
    rows: Iterable[dict[str, Any] | Sequence[Any]]
) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)

    for row in rows:
        if isinstance(row, dict):
            writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])
        else:
            writer.writerow(["" if v is None else v for v in row])

    return write_text_atomic(path, buf.getvalue(), logger=_fs_logger)

def load_csv(path: Path | str) -> list[dict[str, str]]:
    path = Path(path)

    if not path.exists():
        raise FileNotFoundError(path)

    with path.open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))

def load_json_document(path: Path | str, *, error_cls: type[ValueError]) -> Any:
    """
    Strict JSON load for user-authored files; syntax errors carry line/column.
    """
    path = Path(path)

    if not path.exists():
        raise error_cls("File not found", path=path)

    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise error_cls(f"Invalid JSON: {e.msg}", path=path, line=e.lineno, column=e.colno) from e
