import numpy as np
import pytest

from src.schemas import FactorKind
from src.gbp.factors import DynamicsModel, InterrobotModel, LinearModel, PoseModel, transition_matrix
from src.gbp.gaussian import to_moments
from src.gbp.graph import (
    FactorGraph, Linearization,
    factor_update, iterate_internal, joint_information, variable_update
)


def _random_tree(seed: int) -> FactorGraph:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    graph = FactorGraph(dim=2, damping=0.0)
    graph.add_variables(0, np.zeros((n, 2)))

    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    for i in range(n):
        if i == 0 or rng.random() < 0.5:
            prior.append(0, [i], sigma=float(rng.uniform(0.5, 2.0)), data={"z": rng.normal(size=(1, 2))})

    for i in range(1, n):
        parent = int(rng.integers(i))
        a = np.hstack([np.eye(2), -np.eye(2)]) * rng.uniform(0.5, 2.0)
        graph.add_batch(f"edge:{i}", FactorKind.LINEAR, LinearModel(a), arity=2).append(
            0, [[parent, i]], sigma=float(rng.uniform(0.5, 2.0)), data={"z": rng.normal(size=(1, 2))}
        )

    return graph

def _chain(
    graph: FactorGraph,
    owner: int,
    start: np.ndarray,
    *, k_vars: int=5, dt: float=0.5, warm: bool=False
) -> slice:
    path = np.stack([transition_matrix(dt * k) @ start for k in range(k_vars)])
    end = path[-1]
    lin = path if warm else np.zeros((k_vars, 4))
    span = graph.add_variables(owner, lin, timestep_offsets=np.arange(k_vars) * dt)
    b = span.start

    graph.ensure_batch("pose", FactorKind.POSE, PoseModel(), arity=1).append(
        owner, [[b], [b + k_vars - 1]], sigma=1e-15, data={"z": np.stack([start, end])}
    )
    k = np.arange(k_vars - 1)
    graph.ensure_batch("dyn", FactorKind.DYNAMICS, DynamicsModel(dt), arity=2).append(
        owner, np.column_stack([b + k, b + k + 1]), sigma=0.1
    )
    return span


@pytest.mark.parametrize("seed", range(20))
def test_tree_marginals_match_dense_joint_solve(seed):
    graph = _random_tree(seed)
    mean, cov = to_moments(joint_information(graph))

    iterate_internal(graph, 2 * graph.num_variables + 2)

    for i in range(graph.num_variables):
        sl = slice(2 * i, 2 * i + 2)
        var_mean, var_cov = to_moments(graph.belief(i))
        assert np.allclose(var_mean, mean[sl], atol=1e-6)
        assert np.allclose(var_cov, cov[sl, sl], atol=1e-6)
        assert np.allclose(graph.lin[i], mean[sl], atol=1e-6)


def test_iterate_zero_rounds_leaves_graph_unchanged():
    graph = _random_tree(0)
    before = graph.lin.copy()

    iterate_internal(graph, 0)

    assert np.array_equal(graph.lin, before)
    assert all(graph.belief(i).is_vacuous() for i in range(graph.num_variables))


def test_single_unary_message_becomes_belief():
    graph = FactorGraph(dim=2, damping=0.0)
    graph.add_variables(0, np.zeros((1, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    prior.append(0, [0], sigma=0.5, data={"z": [[1.0, -1.0]]})

    assert factor_update(graph, prior) == 1
    variable_update(graph)

    assert np.array_equal(graph.belief_eta[0], prior.msg_eta[0, 0])
    assert np.array_equal(graph.belief_lam[0], prior.msg_lam[0, 0])
    assert np.allclose(graph.lin[0], [1.0, -1.0])


def test_pairwise_message_excludes_own_previous_message():
    graph = FactorGraph(dim=2, damping=0.0)
    graph.add_variables(0, np.zeros((2, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    prior.append(0, [0, 1], sigma=1.0, data={"z": [[1.0, 0.0], [3.0, 0.0]]})
    edge = graph.add_batch("edge", FactorKind.LINEAR, LinearModel(np.hstack([np.eye(2), -np.eye(2)])), arity=2)
    edge.append(0, [[0, 1]], sigma=1.0)

    iterate_internal(graph, 3)
    first = edge.msg_lam.copy()

    # converged: recomputing against (belief - own message) reproduces the same message
    factor_update(graph, edge)
    assert np.allclose(edge.msg_lam, first)
    assert np.allclose(graph.belief_lam[0], np.eye(2) + 0.5 * np.eye(2))


def test_out_of_range_interrobot_rows_leave_beliefs_bit_identical():
    def _run(with_links: bool) -> FactorGraph:
        graph = FactorGraph(damping=0.0)
        if with_links:
            graph.add_batch("ir", FactorKind.INTERROBOT, InterrobotModel(1.0), arity=2)
        a = _chain(graph, 0, np.array([0.0, 0.0, 2.0, 1.0]), warm=True)
        b = _chain(graph, 1, np.array([50.0, 50.0, -1.0, 0.0]), warm=True)
        if with_links:
            k = np.arange(1, 5)
            graph.batches["ir"].append(7, np.column_stack([a.start + k, b.start + k]), sigma=0.005)
            graph.batches["ir"].enabled[1] = False

        for _ in range(6):
            iterate_internal(graph, 1)
            if with_links:
                factor_update(graph, graph.batches["ir"])
                variable_update(graph)
        return graph

    base, linked = _run(False), _run(True)
    assert np.array_equal(base.belief_eta, linked.belief_eta)
    assert np.array_equal(base.belief_lam, linked.belief_lam)
    assert np.array_equal(base.lin, linked.lin)


def test_dynamics_pair_matches_least_squares():
    dt = 0.5
    za = np.array([0.0, 0.0, 1.0, 0.0])
    zb = np.array([1.0, 0.5, 1.0, 0.0])

    graph = FactorGraph(damping=0.0)
    graph.add_variables(0, np.zeros((2, 4)))
    graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(4)), arity=1).append(
        0, [0, 1], sigma=np.array([0.2, 0.3]), data={"z": np.stack([za, zb])}
    )
    graph.add_batch("dyn", FactorKind.DYNAMICS, DynamicsModel(dt), arity=2).append(0, [[0, 1]], sigma=0.1)

    iterate_internal(graph, 4)

    # weighted least squares on the stacked pair
    f = transition_matrix(dt)
    rows = [np.hstack([np.eye(4), np.zeros((4, 4))]) / 0.2,
            np.hstack([np.zeros((4, 4)), np.eye(4)]) / 0.3,
            np.hstack([-f, np.eye(4)]) / 0.1]
    rhs = [za / 0.2, zb / 0.3, np.zeros(4)]
    solution = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)[0]

    assert np.allclose(graph.lin[0], solution[:4], atol=1e-8)
    assert np.allclose(graph.lin[1], solution[4:], atol=1e-8)


def test_disabled_rows_send_vacuous_messages():
    graph = FactorGraph(dim=2, damping=0.0)
    graph.add_variables(0, np.zeros((2, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    prior.append(0, [0, 1], sigma=1.0, data={"z": np.ones((2, 2))})

    factor_update(graph, prior)
    prior.enabled[1] = False

    assert factor_update(graph, prior) == 1
    assert np.any(prior.msg_lam[0])
    assert not np.any(prior.msg_eta[1]) and not np.any(prior.msg_lam[1])


class _Guarded:
    def linearize(self, x, data):
        n = x.shape[0]
        return Linearization(np.zeros((n, 1)), np.ones((n, 1, x.shape[1])), np.ones(n, dtype=bool))


def test_guarded_rows_are_counted_and_send_vacuous():
    graph = FactorGraph(dim=2)
    graph.add_variables(0, np.zeros((3, 2)))
    batch = graph.add_batch("g", FactorKind.TRACKING, _Guarded(), arity=1)
    batch.append(0, [0, 1, 2], sigma=1.0)

    factor_update(graph, batch)

    assert not np.any(batch.msg_lam)
    assert batch.diagnostics["guard"] == 3
    assert graph.diagnostics()["guard"] == 3


def test_singular_marginal_is_counted_not_raised():
    graph = FactorGraph(dim=2)
    graph.add_variables(0, np.zeros((1, 2)))
    graph.add_variables(1, np.zeros((1, 2)))
    batch = graph.add_batch("rank1", FactorKind.LINEAR, LinearModel([[1.0, 0.0, -1.0, 0.0]]), arity=2)
    batch.append(0, [[0, 1]], sigma=1.0)

    factor_update(graph, batch)

    assert batch.diagnostics["singular"] == 2
    assert not np.any(batch.msg_lam)


def test_joint_information_skips_disabled_rows():
    graph = FactorGraph(dim=2)
    graph.add_variables(0, np.zeros((1, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    prior.append(0, [0, 0], sigma=1.0, data={"z": [[1.0, 2.0], [5.0, 5.0]]})
    prior.enabled[1] = False

    mean, _ = to_moments(joint_information(graph))
    assert np.allclose(mean, [1.0, 2.0])


def test_shared_slots_accumulate_every_message():
    graph = FactorGraph(dim=2, damping=0.0)
    graph.add_variables(0, np.zeros((1, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    prior.append(0, [0, 0, 0], sigma=1.0, data={"z": [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]})

    assert prior.unique_slots() == [False]
    iterate_internal(graph, 1)

    assert np.allclose(graph.belief_lam[0], 3.0 * np.eye(2))
    assert np.allclose(graph.lin[0], [2.0, 0.0])


def test_duplicate_batch_name_rejected():
    graph = FactorGraph(dim=2)
    graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)

    with pytest.raises(ValueError):
        graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)
    with pytest.raises(ValueError):
        graph.ensure_batch("prior", FactorKind.POSE, PoseModel(), arity=1)


def test_rows_reject_bad_sigma_and_mismatched_data():
    graph = FactorGraph(dim=2)
    graph.add_variables(0, np.zeros((2, 2)))
    prior = graph.add_batch("prior", FactorKind.LINEAR, LinearModel(np.eye(2)), arity=1)

    with pytest.raises(ValueError):
        prior.append(0, [0], sigma=0.0, data={"z": [[0.0, 0.0]]})
    prior.append(0, [0], sigma=1.0, data={"z": [[0.0, 0.0]]})
    with pytest.raises(ValueError):
        prior.append(0, [1], sigma=1.0)


def test_damping_outside_range_rejected():
    with pytest.raises(ValueError):
        FactorGraph(damping=0.9)


def test_remove_owner_compacts_indices():
    graph = FactorGraph(damping=0.0)
    spans = [_chain(graph, owner, np.array([10.0 * owner, 0.0, 1.0, 0.0]), k_vars=3) for owner in range(3)]
    ir = graph.add_batch("ir", FactorKind.INTERROBOT, InterrobotModel(5.0), arity=2)
    ir.append(0, [[spans[0].start + 1, spans[2].start + 1]], sigma=0.005)
    ir.append(1, [[spans[1].start + 1, spans[2].start + 1]], sigma=0.005)
    lin_2 = graph.lin[spans[2]].copy() + 1.0
    graph.lin[spans[2]] = lin_2

    graph.remove_owner(1)

    assert graph.num_variables == 6
    assert graph.span(2) == slice(3, 6)
    assert np.array_equal(graph.lin[graph.span(2)], lin_2)
    assert len(graph.batches["dyn"]) == 4
    assert np.all(graph.batches["dyn"].var_idx < 6)
    assert ir.groups.tolist() == [0]
    assert ir.var_idx.tolist() == [[1, 4]]
    graph.check_chain(2)


def test_anchored_chain_follows_constant_velocity():
    dt = 0.5
    k_vars = 5
    start = np.array([0.0, 0.0, 2.0, 1.0])

    graph = FactorGraph(damping=0.0)
    span = _chain(graph, 0, start, k_vars=k_vars, dt=dt)
    graph.check_chain(0)

    iterate_internal(graph, 2 * k_vars)

    for k in range(k_vars):
        expected = transition_matrix(dt * k) @ start
        assert np.allclose(graph.lin[span.start + k], expected, atol=1e-6)
