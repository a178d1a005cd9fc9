import numpy as np
import pytest

from walknav.graph import build_graph, classify_edges
from walknav.meanfield import (EDGE_TYPES, MeanState, UnsupportedModeError, complete_graph_recursion,
                               hitting_length_pmf, recursive_step, recursive_trajectory,
                               two_decision_recursion)
from walknav.rewards import InverseLinear, PowerLaw, RewardMode, RewardModel
from walknav.topologies import complete_graph, equal_routes, two_decision_points, two_route_loop

SINGLE_PHI2 = RewardModel(PowerLaw(2.0), RewardMode.SINGLE)
SINGLE_INV = RewardModel(InverseLinear(), RewardMode.SINGLE)


def chain(n):
    return build_graph(nodes=n + 1, edges=[(i, i + 1) for i in range(n)], source=0, destination=n)


def test_pmf_deterministic_chain():
    g = chain(3)
    pmf = hitting_length_pmf(g, MeanState.initial(g), 0, 3)
    assert pmf.as_dict() == {3: 1.0}


def test_pmf_fair_split():
    g = build_graph(nodes=6, edges=[(0, 1), (1, 5), (0, 2), (2, 3), (3, 4), (4, 5)],
                    source=0, destination=5)
    pmf = hitting_length_pmf(g, MeanState.initial(g), 0, 5)
    assert pmf.as_dict() == pytest.approx({2: 0.5, 4: 0.5})


def test_pmf_geometric():
    p = 0.7
    g = build_graph(nodes=2, edges=[(0, 0), (0, 1)], source=0, destination=1,
                    initial_weights=[p, 1 - p])
    pmf = hitting_length_pmf(g, MeanState.initial(g), 0, 1, horizon=200)
    k = pmf.offset + np.arange(pmf.probabilities.size)
    assert np.allclose(pmf.probabilities, p ** (k - 1) * (1 - p), atol=1e-15)
    assert pmf.total <= 1 + 1e-12


def test_pmf_truncation_warns():
    g = build_graph(nodes=2, edges=[(0, 0), (0, 1)], source=0, destination=1,
                    initial_weights=[0.99, 0.01])
    with pytest.warns(RuntimeWarning):
        pmf = hitting_length_pmf(g, MeanState.initial(g), 0, 1, horizon=10)
    assert pmf.truncated
    assert pmf.total + pmf.tail_mass == pytest.approx(1)


def test_pmf_absorbing_nodes_kill_mass():
    g = build_graph(nodes=3, edges=[(0, 1), (0, 2), (2, 1)], source=0, destination=1)
    pmf = hitting_length_pmf(g, MeanState.initial(g), 0, 1, absorb=(2,))
    assert pmf.as_dict() == pytest.approx({1: 0.5})
    assert pmf.killed_mass == pytest.approx(0.5)


def test_one_step_two_decision_points():
    g = two_decision_points()
    s = recursive_step(g, None, SINGLE_PHI2, MeanState.initial(g))
    names = g.edge_names
    w = [s.mean_weights[names[k]] for k in ("w1", "w2", "w3", "w4")]
    assert w == pytest.approx([1 + 0.5 / 49, 1 + 0.5 * (0.5 / 36 + 0.5 / 441),
                               1 + 0.25 / 36, 1 + 0.25 / 441], rel=1e-12)
    assert s.n == 1


def test_single_edge_chain_grows_by_reward():
    g = chain(4)
    s = MeanState.initial(g)
    for _ in range(3):
        s = recursive_step(g, None, SINGLE_INV, s)
    assert np.allclose(s.mean_weights, 1 + 3 * 0.25)


def test_symmetric_routes_stay_balanced():
    g = equal_routes(4)
    traj = recursive_trajectory(g, None, SINGLE_INV, n_walks=500, checkpoints=[0, 10, 500])
    out = list(g.out_edges(g.source))
    assert np.allclose(traj.mean_normalized_weights[:, out], 0.5)


def test_single_path_dag_constant():
    g = chain(5)
    traj = recursive_trajectory(g, None, RewardModel(InverseLinear()), n_walks=50)
    assert np.all(traj.mean_normalized_weights == 1.0)


def test_general_matches_closed_recursion():
    g = two_decision_points()
    cp = np.array([0, 1, 10, 100, 1000, 5000])
    traj = recursive_trajectory(g, None, SINGLE_PHI2, n_walks=5000, checkpoints=cp)
    _, r = two_decision_recursion(SINGLE_PHI2, n_walks=5000, checkpoints=cp)
    cols = [g.edge_names[k] for k in ("w1", "w2", "w3", "w4")]
    assert np.allclose(traj.mean_normalized_weights[:, cols], r, atol=1e-12)


def test_fig2_nonmonotone():
    _, r = two_decision_recursion(SINGLE_PHI2, n_walks=10**5)
    # r2 first loses ground to the short first hop, then recovers
    r2 = r[:, 1]
    low = np.argmin(r2)
    assert 0 < low < r2.size - 1 and r2[low] < r2[0] - 0.03 and r2[-1] > r2[low] + 0.2


def test_lumped_matches_general_on_small_complete_graph():
    g = complete_graph(6)
    cp = np.array([0, 5, 50, 300])
    lumped = recursive_trajectory(g, None, SINGLE_INV, n_walks=300, checkpoints=cp)
    general = recursive_trajectory(g, None, SINGLE_INV, n_walks=300, checkpoints=cp,
                                   lumping="never")
    assert lumped.meta["method"] == "recursive_lumped"
    assert np.allclose(lumped.mean_normalized_weights, general.mean_normalized_weights, atol=1e-12)
    assert np.allclose(lumped.shortest_path_fraction, general.shortest_path_fraction, atol=1e-12)


def test_complete_graph_five_types():
    cp, r, spf = complete_graph_recursion(12, SINGLE_INV, n_walks=2000, checkpoints=[0, 2000])
    assert r.shape == (2, len(EDGE_TYPES))
    assert len(set(np.round(r[-1], 8))) == 5
    with pytest.raises(UnsupportedModeError):
        complete_graph_recursion(12, RewardModel(InverseLinear()), n_walks=10)


def test_normalized_means_sum_to_one():
    g = two_route_loop()
    traj = recursive_trajectory(g, None, SINGLE_INV, n_walks=300)
    out = list(g.out_edges(g.source))
    assert np.allclose(traj.mean_normalized_weights[:, out].sum(axis=1), 1, atol=1e-9)


def test_deterministic_and_monotone_weights():
    g = two_route_loop()
    s0 = MeanState.initial(g)
    s1 = recursive_step(g, None, SINGLE_INV, s0)
    s2 = recursive_step(g, None, SINGLE_INV, s1)
    assert np.all(s1.mean_weights >= s0.mean_weights) and np.all(s2.mean_weights >= s1.mean_weights)
    a = recursive_trajectory(g, None, SINGLE_INV, n_walks=200)
    b = recursive_trajectory(g, None, SINGLE_INV, n_walks=200)
    assert np.array_equal(a.mean_normalized_weights, b.mean_normalized_weights)


def test_multiple_reward_rejected_on_cyclic_graph():
    g = two_route_loop()
    with pytest.raises(UnsupportedModeError):
        recursive_step(g, None, RewardModel(InverseLinear()), MeanState.initial(g))


def test_multiple_reward_on_dag_matches_single():
    # on a DAG every edge is traversed at most once, so the two models coincide
    g = two_decision_points()
    a = recursive_trajectory(g, None, RewardModel(PowerLaw(2.0)), n_walks=200)
    b = recursive_trajectory(g, None, SINGLE_PHI2, n_walks=200)
    assert np.array_equal(a.mean_normalized_weights, b.mean_normalized_weights)


def test_failure_probability_reported():
    g = build_graph(nodes=3, edges=[(0, 1), (0, 2)], source=0, destination=1)
    traj = recursive_trajectory(g, classify_edges(g), SINGLE_INV, n_walks=10, checkpoints=[0, 10])
    assert traj.failed_fraction[0] == pytest.approx(0.5)
    assert traj.failed_fraction[1] < 0.5
