from __future__ import annotations
from pathlib import Path


class DimensionMismatchError(ValueError):
    pass


class NonInvertibleError(ValueError):
    """Precision block too ill-conditioned to invert."""
    def __init__(self, message: str, *, condition: float | None=None):
        super().__init__(message)
        self.condition = condition


class DegenerateSegmentError(ValueError):
    pass


class PlanningFailedError(RuntimeError):
    pass


class _FileError(ValueError):
    def __init__(
        self,
        message: str,
        *,
        path: str | Path | None=None,
        line: int | None=None,
        column: int | None=None
    ):
        self.path = Path(path) if path is not None else None
        self.line = line
        self.column = column

        where = ""
        if self.path is not None:
            where = f"{self.path}"
            if line is not None:
                where += f":{line}:{column if column is not None else 0}"
            where += ": "

        super().__init__(f"{where}{message}")


class EnvironmentFileError(_FileError):
    pass


class ScenarioFileError(_FileError):
    pass
