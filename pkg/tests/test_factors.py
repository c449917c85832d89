import numpy as np
import pytest

from src.config import SIMULATION_CONFIG
from src.env.environment import make_environment
from src.env.geometry import Circle
from src.env.sdf import sdf_at, sdf_at_many
from src.gbp.factors import (
    DynamicsModel, FactorParams, InterrobotModel, ObstacleModel, PoseModel,
    interrobot_terms, obstacle_terms, transition_matrix
)


def _numeric_jacobian(fn, x: np.ndarray, eps: float=1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = eps
        cols.append((np.atleast_1d(fn(x + step)) - np.atleast_1d(fn(x - step))) / (2 * eps))
    return np.stack(cols, axis=1)

def _ir_h(pair: np.ndarray, d_i: float) -> float:
    h, _ = interrobot_terms(pair[None], d_i)
    return float(h[0])


def test_transition_matrix():
    f = transition_matrix(0.5)
    assert np.array_equal(f @ np.array([1.0, 2.0, 2.0, -4.0]), [2.0, 0.0, 2.0, -4.0])


def test_dynamics_constant_velocity_is_consistent():
    dt = 0.4
    pairs = np.array([
        [0.0, 0.0, 1.0, 0.0, dt, 0.0, 1.0, 0.0],
        [1.0, 2.0, 0.0, -2.0, 1.0, 2.0 - 2 * dt, 0.0, -2.0],
    ])
    lin = DynamicsModel(dt).linearize(pairs, {})
    assert lin.h.shape == (2, 4)
    assert np.allclose(lin.h, 0.0)


def test_dynamics_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    model = DynamicsModel(0.3)
    pairs = rng.normal(size=(20, 8))
    lin = model.linearize(pairs, {})

    for r, pair in enumerate(pairs):
        num = _numeric_jacobian(lambda x: model.linearize(x[None], {}).h[0], pair)
        assert np.allclose(lin.jac[r], num, atol=1e-6)


def test_dynamics_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        DynamicsModel(0.0)


def test_pose_model_is_identity():
    x = np.arange(8.0).reshape(2, 4)
    lin = PoseModel().linearize(x, {"z": x})
    assert np.array_equal(lin.h, x)
    assert np.array_equal(lin.jac[1], np.eye(4))


def test_interrobot_ramp_examples():
    d_i = 4.0
    pairs = np.array([
        [0.0, 0.0, 0.0, 0.0, d_i, 0.0, 0.0, 0.0],           # at the limit
        [0.0, 0.0, 0.0, 0.0, 0.0, d_i / 2, 0.0, 0.0],       # halfway
    ])
    h, jac = interrobot_terms(pairs, d_i)

    assert h[0] == 0.0
    assert not np.any(jac[0])
    assert h[1] == pytest.approx(0.5)
    assert np.any(jac[1])


def test_interrobot_jacobian_matches_finite_differences():
    rng = np.random.default_rng(1)
    d_i = 5.0
    checked = 0
    while checked < 50:
        pair = rng.uniform(-2.0, 2.0, size=8)
        pair[[2, 3, 6, 7]] = 0.0        # stationary robots: no head-on turn
        dist = np.linalg.norm(pair[0:2] - pair[4:6])
        if not (0.1 < dist < d_i - 0.1):
            continue
        num = _numeric_jacobian(lambda x: _ir_h(x, d_i), pair)
        _, jac = interrobot_terms(pair[None], d_i)
        assert np.allclose(jac, num, atol=1e-6)
        checked += 1


def test_interrobot_coincident_robots_have_zero_jacobian():
    pair = np.array([[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]])
    h, jac = interrobot_terms(pair, 3.0)
    assert h[0] == 1.0
    assert not np.any(jac)


def test_interrobot_headon_pair_is_turned_to_the_right():
    d_i = 10.0
    deflection = np.deg2rad(15.0)
    pairs = np.array([
        [0.0, 0.0, 1.0, 0.0, 5.0, 0.0, -1.0, 0.0],          # closing head-on
        [0.0, 0.0, -1.0, 0.0, 5.0, 0.0, 1.0, 0.0],          # separating
        [0.0, 0.0, 0.0, 1.0, 5.0, 0.0, 0.0, -1.0],          # passing side by side
    ])
    h, jac = interrobot_terms(pairs, d_i, cone=np.deg2rad(5.0), deflection=deflection)
    _, straight = interrobot_terms(pairs, d_i, deflection=0.0)

    assert np.allclose(h, 0.5)

    # a is pushed along -jac: backwards and toward -y, its right when heading +x
    push_a = -jac[0, 0:2] * d_i
    assert push_a == pytest.approx([-np.cos(deflection), -np.sin(deflection)])
    assert np.allclose(jac[0, 4:6], -jac[0, 0:2])

    assert np.array_equal(jac[1:], straight[1:])
    assert np.array_equal(straight[0, 0:2], [1.0 / d_i, 0.0])


def test_interrobot_model_rejects_bad_distance():
    with pytest.raises(ValueError):
        InterrobotModel(0.0)


@pytest.fixture(scope="module")
def circle_env():
    return make_environment([0, 0, 20, 20], [Circle(np.array([10.0, 10.0]), 2.0)], cell_size=0.25)


def test_sdf_at_many_matches_sdf_at(circle_env):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2.0, 22.0, size=(40, 2))
    many = sdf_at_many(circle_env.sdf, pts)
    assert np.allclose(many, [sdf_at(circle_env.sdf, p) for p in pts])

    assert np.isnan(sdf_at_many(circle_env.sdf, np.array([[np.nan, 1.0]]))[0])


def test_obstacle_free_space_is_inactive(circle_env):
    h, jac = obstacle_terms(np.array([[18.0, 18.0]]), circle_env.sdf, 2.0)
    assert h[0] == 0.0
    assert not np.any(jac)


def test_obstacle_ramp_and_direction(circle_env):
    d_o = 4.0
    x = np.array([[14.5, 10.0, 0.0, 0.0]])      # 2.5 m from the circle surface

    lin = ObstacleModel(circle_env.sdf, d_o).linearize(x, {})
    assert lin.h[0, 0] == pytest.approx(1.0 - 2.5 / d_o, abs=0.02)

    jac = lin.jac[0]
    assert jac.shape == (1, 4)
    assert jac[0, 0] == pytest.approx(-1.0 / d_o, abs=0.02)
    assert abs(jac[0, 1]) < 0.02
    assert jac[0, 2] == 0.0 and jac[0, 3] == 0.0


def test_obstacle_without_obstacles():
    env = make_environment([0, 0, 10, 10], [])
    h, jac = obstacle_terms(np.array([[5.0, 5.0]]), env.sdf, 2.0)
    assert h[0] == 0.0
    assert not np.any(jac)


def test_factor_params_reject_non_positive():
    with pytest.raises(ValueError):
        FactorParams(sigma_tracking=0.0)
    assert FactorParams.from_dict({"d_i": 4.0}).d_i == 4.0


def test_factor_params_derive_obstacle_distance_from_radius():
    assert SIMULATION_CONFIG["d_o"] is None
    assert FactorParams().d_o == float(SIMULATION_CONFIG["robot_radius"])
    assert FactorParams.from_dict({"robot_radius": 3.0}).d_o == 3.0
    assert FactorParams.from_dict({"robot_radius": 3.0, "d_o": 1.5}).d_o == 1.5
