import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import reference_run
from walknav.graph import build_graph, classify_edges
from walknav.rewards import InverseLinear, PowerLaw, RewardMode, RewardModel
from walknav.topologies import (grid25, random_graph, sequential_clocks, single_decision_tradeoff,
                                two_route_loop)
from walknav.walk import (RewardContractError, WalkOutcome, WeightState, apply_reward,
                          log_checkpoints, read_trajectory_csv, run_walk, simulate_ensemble,
                          simulate_run, write_trajectory_csv)

SINGLE = RewardModel(InverseLinear(), RewardMode.SINGLE)
MULTI = RewardModel(InverseLinear(), RewardMode.MULTIPLE)


def triangle():
    return build_graph(nodes=3, edges=[(0, 1), (1, 2), (0, 2)], source=0, destination=2)


def test_apply_reward_single_vs_multiple():
    g = two_route_loop()
    w = WeightState.initial(g)
    o = WalkOutcome((3, 4, 3, 4, 0), 5, True, {3: 2, 4: 2, 0: 1})
    single = apply_reward(w, o, SINGLE).weights
    multi = apply_reward(w, o, MULTI).weights
    assert single[3] == pytest.approx(1.2) and single[0] == pytest.approx(1.2)
    assert multi[3] == pytest.approx(1.4) and multi[0] == pytest.approx(1.2)
    assert single[1] == multi[1] == 1.0


def test_triangle_single_step_reward():
    g = triangle()
    o = WalkOutcome((2,), 1, True, {2: 1})
    w = apply_reward(WeightState.initial(g), o, SINGLE)
    assert np.allclose(w.weights, [1, 1, 2])
    assert np.allclose(w.normalized(g), [1 / 3, 1, 2 / 3])
    assert w.n == 1


def test_failed_walk_cannot_be_rewarded():
    g = triangle()
    with pytest.raises(RewardContractError):
        apply_reward(WeightState.initial(g), WalkOutcome((0,), 1, False, {0: 1}, 1), SINGLE)


def test_run_walk_leaves_weights_and_records_path():
    g = grid25()
    w = WeightState.initial(g)
    before = w.weights.copy()
    o = run_walk(g, w, np.random.default_rng(1))
    assert o.reached
    assert np.array_equal(w.weights, before)
    assert o.length == len(o.path) == sum(o.visits.values())
    u = g.source
    for e in o.path:
        assert g.edges[e][0] == u
        u = g.edges[e][1]
    assert u == g.destination


def test_walk_into_dead_region_fails():
    g = build_graph(nodes=3, edges=[(0, 1), (0, 2)], source=0, destination=1,
                    initial_weights=[1e-9, 1.0])
    o = run_walk(g, WeightState.initial(g), np.random.default_rng(0))
    assert not o.reached and o.path == (1,)


def test_step_cap_fails_walk():
    g = two_route_loop()
    g = build_graph(g.to_dict(), initial_weights=[1e-12, 1e-12, 1.0, 1.0, 1.0])
    o = run_walk(g, WeightState.initial(g), np.random.default_rng(0), max_steps=4)
    assert not o.reached and o.length == 4


def test_log_checkpoints():
    cp = log_checkpoints(10**6, 30)
    assert cp[0] == 1 and cp[-1] == 10**6
    assert np.all(np.diff(cp) > 0)
    assert 25 <= cp.size <= 30


@pytest.mark.parametrize("g, model", [
    (grid25(), MULTI), (grid25(), SINGLE), (two_route_loop(), RewardModel(PowerLaw(2.0))),
    (sequential_clocks(3), SINGLE),
])
def test_kernel_matches_reference(g, model):
    ref_w, lengths, reached = reference_run(g, model.f, model.mode is RewardMode.MULTIPLE, 500, 42)
    traj = simulate_run(g, None, model, n_walks=500, checkpoints=[500], seed=42)
    expected = WeightState(ref_w).normalized(g)
    assert np.allclose(traj.mean_normalized_weights[-1], expected, rtol=0, atol=1e-14)
    L_min = classify_edges(g).L_min
    short = sum(ok and L == L_min for L, ok in zip(lengths, reached))
    assert traj.shortest_path_fraction[-1] == pytest.approx(short / 500)
    assert traj.failed_fraction[-1] == pytest.approx(1 - sum(reached) / 500)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 7), st.sampled_from([SINGLE, MULTI]))
def test_kernel_matches_reference_random_graphs(seed, n, model):
    g = random_graph(n, 0.4, np.random.default_rng(seed))
    ref_w, _, reached = reference_run(g, model.f, model.mode is RewardMode.MULTIPLE, 60, seed)
    traj = simulate_run(g, None, model, n_walks=60, checkpoints=[60], seed=seed)
    assert np.allclose(traj.mean_normalized_weights[-1], WeightState(ref_w).normalized(g),
                       rtol=0, atol=1e-13)
    assert traj.failed_fraction[-1] == pytest.approx(1 - sum(reached) / 60)


def test_failed_walks_change_nothing():
    # nodes 3 and 1 cannot reach the destination, so only edge 1 is ever reinforced
    g = build_graph(nodes=4, edges=[(0, 3), (0, 2), (3, 1)], source=0, destination=2)
    traj = simulate_run(g, None, MULTI, n_walks=2000, checkpoints=[2000], seed=5)
    ref_w, _, reached = reference_run(g, MULTI.f, True, 2000, 5)
    assert ref_w[0] == 1.0 and ref_w[2] == 1.0
    assert ref_w[1] == 1.0 + sum(reached)
    assert traj.failed_fraction[-1] == pytest.approx(1 - np.mean(reached))


def test_run_reproducible_and_seed_sensitive():
    g = grid25()
    a = simulate_run(g, None, MULTI, n_walks=300, seed=3)
    b = simulate_run(g, None, MULTI, n_walks=300, seed=3)
    c = simulate_run(g, None, MULTI, n_walks=300, seed=4)
    assert np.array_equal(a.mean_normalized_weights, b.mean_normalized_weights)
    assert not np.array_equal(a.mean_normalized_weights, c.mean_normalized_weights)


def test_ensemble_of_one_equals_run():
    from walknav.walk import run_seed
    g = single_decision_tradeoff()
    e = simulate_ensemble(g, None, MULTI, n_walks=400, run_count=1, master_seed=9)
    r = simulate_run(g, None, MULTI, n_walks=400, seed=run_seed(9, 0))
    assert np.array_equal(e.mean_normalized_weights, r.mean_normalized_weights)


def test_ensemble_independent_of_jobs():
    g = grid25()
    kw = dict(n_walks=200, run_count=6, master_seed=11, checkpoints=[0, 10, 200])
    a = simulate_ensemble(g, None, SINGLE, **kw)
    b = simulate_ensemble(g, None, SINGLE, n_jobs=2, **kw)
    assert np.array_equal(a.mean_normalized_weights, b.mean_normalized_weights)
    assert np.array_equal(a.clock_estimates, b.clock_estimates)
    assert np.isnan(a.shortest_path_fraction[0])
    assert a.final_normalized_weights.shape == (6, g.edge_count)


def test_normalized_weights_sum_to_one_per_node():
    g = grid25()
    traj = simulate_ensemble(g, None, MULTI, n_walks=300, run_count=3, master_seed=0)
    sums = np.zeros((traj.checkpoints.size, g.node_count))
    for e, u in enumerate(g.tails):
        sums[:, u] += traj.mean_normalized_weights[:, e]
    has_out = np.bincount(g.tails, minlength=g.node_count) > 0
    assert np.allclose(sums[:, has_out], 1.0)


def test_clocks_count_each_node_once_per_walk():
    g = two_route_loop()
    traj = simulate_run(g, None, MULTI, n_walks=1000, checkpoints=[1000], seed=0)
    assert traj.clock_estimates[-1, g.source] == 1000
    assert traj.clock_estimates[-1, g.destination] <= 1000


def test_checkpoint_validation():
    g = triangle()
    with pytest.raises(ValueError):
        simulate_run(g, None, MULTI, n_walks=10, checkpoints=[5, 2])
    with pytest.raises(ValueError):
        simulate_run(g, None, MULTI, n_walks=10, checkpoints=[20])
    with pytest.raises(ValueError):
        simulate_ensemble(g, None, MULTI, n_walks=10, run_count=0)


def test_trajectory_csv_round_trip(tmp_path):
    g = two_route_loop()
    traj = simulate_ensemble(g, None, MULTI, n_walks=100, run_count=2, master_seed=1,
                             checkpoints=[0, 10, 100])
    path = write_trajectory_csv(traj, tmp_path / "t.csv", method="simulation")
    data = read_trajectory_csv(path)
    n, v = data[("edge_rw", "2")]
    assert np.array_equal(n, [0, 10, 100])
    assert np.array_equal(v, traj.mean_normalized_weights[:, 2])
    n, v = data[("spf", "all")]
    assert np.array_equal(n, [10, 100])
    assert ("node_clock", "0") in data
    assert path.read_text().splitlines()[0] == "n,entity_kind,entity_id,value,method"
