import numpy as np
import pytest

from src.env.environment import circle_env_intersects, make_environment
from src.env.geometry import (
    Circle, Polygon, circle_circle_intersects, circle_obstacle_intersects,
    points_in_polygon, rectangle, segment_obstacle_distance, signed_distance
)
from src.env.sdf import build_sdf, sdf_at


def test_circle_circle_strict_boundary():
    assert circle_circle_intersects([0, 0], 1.0, [1.9, 0], 1.0) is True
    assert circle_circle_intersects([0, 0], 1.0, [2.0, 0], 1.0) is False


def test_circle_tangent_to_polygon_edge_does_not_intersect():
    box = rectangle(0, 0, 4, 4)
    assert circle_obstacle_intersects(np.array([6.0, 2.0]), 2.0, box) is False
    assert circle_obstacle_intersects(np.array([5.9, 2.0]), 2.0, box) is True


def test_polygon_orientation_is_normalized():
    cw = Polygon(np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float))
    assert points_in_polygon(np.array([[0.5, 0.5], [1.5, 0.5]]), cw).tolist() == [True, False]


def test_non_convex_polygon_rejected():
    with pytest.raises(ValueError):
        Polygon(np.array([[0, 0], [2, 0], [1, 0.5], [2, 2], [0, 2]], dtype=float))


def test_signed_distance_sign_convention():
    box = rectangle(0, 0, 4, 4)
    d = signed_distance(np.array([[2.0, 2.0], [6.0, 2.0]]), box)
    assert d[0] == pytest.approx(-2.0)
    assert d[1] == pytest.approx(2.0)


def test_segment_obstacle_distance():
    box = rectangle(0, 0, 4, 4)
    assert segment_obstacle_distance(np.array([-1.0, 2.0]), np.array([5.0, 2.0]), box) == 0.0
    assert segment_obstacle_distance(np.array([-1.0, 6.0]), np.array([5.0, 6.0]), box) == pytest.approx(2.0)

    disc = Circle(np.array([0.0, 0.0]), 1.0)
    assert segment_obstacle_distance(np.array([-5.0, 3.0]), np.array([5.0, 3.0]), disc) == pytest.approx(2.0)


def test_sdf_empty_environment_is_free():
    grid = build_sdf([0, 0, 10, 10], [], cell_size=1.0)
    assert np.all(np.isinf(grid.values))
    assert sdf_at(grid, (5.0, 5.0)) == np.inf


def test_sdf_empty_bounds_rejected():
    with pytest.raises(ValueError):
        build_sdf([0, 0, 0, 10], [])


def test_sdf_cell_center_and_midpoint():
    grid = build_sdf([0, 0, 10, 10], [Circle(np.array([5.0, 5.0]), 1.0)], cell_size=1.0)
    c = grid.cell_center(2, 3)
    assert sdf_at(grid, c) == pytest.approx(grid.values[3, 2])

    mid = 0.5 * (grid.cell_center(2, 3) + grid.cell_center(3, 3))
    assert sdf_at(grid, mid) == pytest.approx(0.5 * (grid.values[3, 2] + grid.values[3, 3]))


def test_sdf_inside_polygon_is_negative():
    grid = build_sdf([0, 0, 10, 10], [rectangle(2, 2, 8, 8)], cell_size=0.5)
    assert sdf_at(grid, (5.0, 5.0)) < 0.0
    assert sdf_at(grid, (9.5, 9.5)) > 0.0


def test_sdf_matches_analytic_circle_within_one_cell():
    cell = 0.5
    circle = Circle(np.array([10.0, 8.0]), 3.0)
    grid = build_sdf([0, 0, 20, 16], [circle], cell_size=cell)
    rng = np.random.default_rng(0)

    pts = rng.uniform([0, 0], [20, 16], size=(100, 2))
    exact = np.linalg.norm(pts - circle.center, axis=1) - circle.radius
    approx = np.array([sdf_at(grid, p) for p in pts])

    assert np.max(np.abs(approx - exact)) <= cell


def test_env_colliders_are_exact():
    env = make_environment([0, 0, 20, 20], [Circle(np.array([10.0, 10.0]), 2.0)])
    assert circle_env_intersects([13.9, 10.0], 2.0, env) is True
    assert circle_env_intersects([14.0, 10.0], 2.0, env) is False
