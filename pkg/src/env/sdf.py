"""
Signed distance field sampled at cell centers over the environment bounds.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.config import SDF_CONFIG
from src.env.geometry import Obstacle, signed_distance

@dataclass(frozen=True, eq=False)
class SdfGrid:
    origin: np.ndarray              # lower-left corner of the grid (m)
    cell_size: float
    values: np.ndarray              # shape (ny, nx); values[iy, ix] at the center of cell (ix, iy)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return self.origin + (np.array([ix, iy], dtype=float) + 0.5) * self.cell_size


def build_sdf(
    bounds: Sequence[float],
    obstacles: Sequence[Obstacle],
    cell_size: float=float(SDF_CONFIG["cell_size"])
) -> SdfGrid:
    """
    Brute-force signed distance at every cell center: the minimum signed distance over
    all obstacles (negative inside). Without obstacles every cell is +inf.
    """
    xmin, ymin, xmax, ymax = (float(v) for v in bounds)

    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"Environment bounds are empty: {list(bounds)}")
    if not (cell_size > 0.0):
        raise ValueError(f"cell_size must be > 0, got {cell_size}")

    nx = max(1, int(np.ceil((xmax - xmin) / cell_size)))
    ny = max(1, int(np.ceil((ymax - ymin) / cell_size)))

    xs = xmin + (np.arange(nx) + 0.5) * cell_size
    ys = ymin + (np.arange(ny) + 0.5) * cell_size
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])

    values = np.full(centers.shape[0], np.inf)
    for obstacle in obstacles:
        values = np.minimum(values, signed_distance(centers, obstacle))

    values = values.reshape(ny, nx)
    values.setflags(write=False)

    return SdfGrid(
        origin=np.array([xmin, ymin]),
        cell_size=float(cell_size),
        values=values
    )

def _axis_index(coord: float, origin: float, cell: float, n: int) -> tuple[int, int, float]:
    f = float(np.clip((coord - origin) / cell - 0.5, 0.0, n - 1))
    i0 = int(np.floor(f))
    i1 = min(i0 + 1, n - 1)
    return i0, i1, f - i0

def sdf_at(grid: SdfGrid, point: Sequence[float] | np.ndarray) -> float:
    """
    Bilinear interpolation between the four surrounding cell centers; queries outside the
    grid are clamped to the nearest cell.
    """
    ny, nx = grid.values.shape
    x0, x1, tx = _axis_index(float(point[0]), grid.origin[0], grid.cell_size, nx)
    y0, y1, ty = _axis_index(float(point[1]), grid.origin[1], grid.cell_size, ny)

    v00 = grid.values[y0, x0]
    v10 = grid.values[y0, x1]
    v01 = grid.values[y1, x0]
    v11 = grid.values[y1, x1]

    if not np.all(np.isfinite([v00, v10, v01, v11])):
        return float(np.inf)

    bottom = (1.0 - tx) * v00 + tx * v10
    top = (1.0 - tx) * v01 + tx * v11
    return float((1.0 - ty) * bottom + ty * top)

def _axis_indices(coords: np.ndarray, origin: float, cell: float, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = np.clip((coords - origin) / cell - 0.5, 0.0, n - 1)
    i0 = np.floor(f).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    return i0, i1, f - i0

def sdf_at_many(grid: SdfGrid, points: np.ndarray) -> np.ndarray:
    """
    sdf_at over an (n, 2) array. Non-finite points give NaN.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.full(len(pts), np.nan)
    finite = np.all(np.isfinite(pts), axis=1)
    if not np.any(finite):
        return out

    ny, nx = grid.values.shape
    p = pts[finite]
    x0, x1, tx = _axis_indices(p[:, 0], grid.origin[0], grid.cell_size, nx)
    y0, y1, ty = _axis_indices(p[:, 1], grid.origin[1], grid.cell_size, ny)

    v00 = grid.values[y0, x0]
    v10 = grid.values[y0, x1]
    v01 = grid.values[y1, x0]
    v11 = grid.values[y1, x1]
    corners = np.isfinite(v00) & np.isfinite(v10) & np.isfinite(v01) & np.isfinite(v11)

    with np.errstate(invalid="ignore"):
        bottom = (1.0 - tx) * v00 + tx * v10
        top = (1.0 - tx) * v01 + tx * v11
        value = (1.0 - ty) * bottom + ty * top

    out[finite] = np.where(corners, value, np.inf)
    return out
