"""Sensor graphs, Metropolis weights, centralized and consensus stepping."""

import numpy as np
import pytest

from plmb import (
    BernoulliTrack,
    FilterParams,
    Label,
    LmbDensity,
    MaxMixture,
    MotionModel,
    SensorGraph,
    centralized_step,
    complete_graph,
    cv_motion,
    distributed_step,
    drop_weak_tracks,
    load_topology,
    metropolis_weights,
    predict,
    ring_graph,
    save_topology,
    update_detailed,
)
from plmb.errors import TopologyError
from plmb.filtering import SensorModel


def random_connected_graph(rng, n):
    """Random spanning tree plus a few extra edges."""
    edges = set()
    for v in range(1, n):
        edges.add((int(rng.integers(0, v)), v))
    for _ in range(int(rng.integers(0, n))):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges.add((min(int(i), int(j)), max(int(i), int(j))))
    return SensorGraph(n, frozenset(edges))


def make_sensor(position, fov=1000.0):
    H = np.hstack([np.eye(2), np.zeros((2, 2))])
    return SensorModel(
        name=f"s{position[0]:.0f}", obs=H, noise=25.0 * np.eye(2),
        position=np.asarray(position, float), fov_scale=fov,
    )


def one_track_density(mean, tau=0.5, gamma=1.0, var=100.0):
    mix = MaxMixture.single(np.asarray(mean, float), var * np.eye(4))
    return LmbDensity([BernoulliTrack(Label(0, 0), tau, gamma, mix)])


# ---------------------------------------------------------------------------
# graphs and weights


def test_metropolis_single_node():
    np.testing.assert_allclose(metropolis_weights(SensorGraph(1, frozenset())), [[1.0]])


def test_metropolis_two_nodes():
    W = metropolis_weights(SensorGraph(2, frozenset({(0, 1)})))
    np.testing.assert_allclose(W, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-15)


def test_metropolis_star_rows_sum_to_one():
    star = SensorGraph(4, frozenset({(0, 1), (0, 2), (0, 3)}))
    W = metropolis_weights(star)
    np.testing.assert_allclose(W, W.T, atol=1e-15)
    np.testing.assert_allclose(W.sum(axis=1), np.ones(4), atol=1e-15)
    # hub neighbourhood (4 incl. self) dominates the leaves' (2 incl. self)
    assert W[0, 1] == pytest.approx(1.0 / 5.0)


def test_metropolis_doubly_stochastic_on_random_graphs():
    rng = np.random.default_rng(51)
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(2, 11)))
        W = metropolis_weights(g)
        assert np.all(W >= -1e-15)
        np.testing.assert_allclose(W, W.T, atol=1e-12)
        np.testing.assert_allclose(W.sum(axis=0), np.ones(g.size), atol=1e-12)
        np.testing.assert_allclose(W.sum(axis=1), np.ones(g.size), atol=1e-12)


def test_consensus_sweep_contracts_scalar_spread():
    rng = np.random.default_rng(52)
    for _ in range(10):
        g = random_connected_graph(rng, int(rng.integers(2, 9)))
        W = metropolis_weights(g)
        y = rng.normal(size=g.size)
        for _ in range(5):
            y2 = W @ y
            assert y2.max() - y2.min() <= y.max() - y.min() + 1e-12
            y = y2


def test_graph_validation():
    with pytest.raises(TopologyError):
        SensorGraph(0, frozenset())
    with pytest.raises(TopologyError):
        SensorGraph(3, frozenset({(1, 1)}))  # explicit self-loop
    with pytest.raises(TopologyError):
        SensorGraph(3, frozenset({(0, 5)}))  # node out of range
    with pytest.raises(TopologyError):
        SensorGraph(4, frozenset({(0, 1), (2, 3)}))  # disconnected
    g = SensorGraph(3, frozenset({(0, 1), (1, 2)}))
    assert g.neighbors(1) == [0, 1, 2]
    assert g.neighbors(0) == [0, 1]


def test_graph_constructors():
    ring = ring_graph(4)
    assert len(ring.edges) == 4
    assert ring.neighbors(0) == [0, 1, 3]
    comp = complete_graph(4)
    assert len(comp.edges) == 6
    assert ring_graph(1).size == 1
    assert ring_graph(2).edges == frozenset({(0, 1)})


def test_topology_file_round_trip(tmp_path):
    rng = np.random.default_rng(53)
    for i in range(5):
        g = random_connected_graph(rng, int(rng.integers(2, 8)))
        path = tmp_path / f"topo_{i}.txt"
        save_topology(g, path)
        back = load_topology(path)
        assert back.size == g.size
        assert back.edges == g.edges
    text = (tmp_path / "topo_0.txt").read_text().splitlines()
    assert text[0].strip().isdigit()  # node-count header
    assert all(len(line.split()) == 2 for line in text[1:])  # "i j" edge lines


def test_topology_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("")
    with pytest.raises(TopologyError):
        load_topology(bad)
    bad.write_text("two\n0 1\n")
    with pytest.raises(TopologyError):
        load_topology(bad)
    bad.write_text("3\n0 1 2\n")
    with pytest.raises(TopologyError):
        load_topology(bad)
    ok = tmp_path / "ok.txt"
    ok.write_text("# comment\n2\n\n0 1\n")
    assert load_topology(ok).size == 2


# ---------------------------------------------------------------------------
# centralized stepping


def test_single_sensor_centralized_equals_plain_filter_step():
    motion = cv_motion(1.0, 3.0)
    sensor = make_sensor([800.0, 800.0])
    prior = one_track_density([0.0, 0.0, 5.0, 0.0])
    scan = np.array([[4.0, 1.0]])
    params = FilterParams()

    fused, usage = centralized_step(prior, [scan], [sensor], motion, None, params)
    ref = update_detailed(predict(prior, motion), scan, sensor, params)
    ref_d = drop_weak_tracks(ref.density, params.track_floor)

    assert fused.labels == ref_d.labels
    for lab in fused.labels:
        assert fused[lab].tau == pytest.approx(ref_d[lab].tau, rel=1e-12)
        assert fused[lab].gamma == pytest.approx(ref_d[lab].gamma, rel=1e-12)
    np.testing.assert_allclose(usage[0], ref.usage)


def test_two_agreeing_sensors_reinforce_existence():
    motion = cv_motion(1.0, 3.0)
    sensors = [make_sensor([900.0, 900.0]), make_sensor([-900.0, 900.0])]
    prior = one_track_density([0.0, 0.0, 0.0, 0.0], tau=1.0, gamma=1.0)
    z = np.array([[0.5, -0.5]])
    one, _ = centralized_step(prior, [z], sensors[:1], motion, None)
    both, _ = centralized_step(prior, [z, z], sensors, motion, None)
    lab = prior.labels[0]
    # two independent corroborating detections argue harder against absence
    assert both[lab].tau < one[lab].tau
    assert both[lab].gamma == pytest.approx(1.0)


def test_centralized_step_validates_scan_count():
    with pytest.raises(TopologyError):
        centralized_step(LmbDensity(), [np.zeros((0, 2))], [], cv_motion(1.0, 1.0), None)


# ---------------------------------------------------------------------------
# distributed stepping


def quiet_motion():
    # identity transition, zero noise: prediction only reshapes possibilities
    return MotionModel(np.eye(4), np.zeros((4, 4)), survival=1.0, death=0.05)


def test_identical_nodes_on_complete_graph_stay_put():
    n = 3
    graph = complete_graph(n)
    sensors = [make_sensor([50_000.0 + i, 50_000.0]) for i in range(n)]  # far: updates are no-ops
    states = [one_track_density([10.0, -5.0, 0.0, 0.0], tau=0.5, gamma=1.0) for _ in range(n)]
    scans = [np.zeros((0, 2))] * n
    out, _ = distributed_step(
        states, scans, sensors, quiet_motion(), [None] * n, graph, step=2,
        consensus_iterations=1, discount=1.0,
    )
    for d in out:
        assert len(d) == 1
        tr = next(iter(d))
        assert tr.gamma == pytest.approx(1.0, abs=1e-9)
        assert tr.tau == pytest.approx(0.5, abs=1e-6)
        np.testing.assert_allclose(tr.mixture.dominant_mean()[:2], [10.0, -5.0], atol=1e-9)


def test_single_node_distributed_equals_local_filter():
    graph = ring_graph(1)
    sensor = make_sensor([200.0, 0.0])
    motion = cv_motion(1.0, 3.0)
    prior = one_track_density([0.0, 0.0, 1.0, 0.0])
    scan = np.array([[1.2, 0.3], [150.0, -80.0]])
    params = FilterParams()
    out, usage = distributed_step(
        [prior], [scan], [sensor], motion, [None], graph, step=1, params=params,
        consensus_iterations=3,
    )
    ref = update_detailed(predict(prior, motion, discount=1.0), scan, sensor, params)
    ref_d = drop_weak_tracks(ref.density, params.track_floor)
    assert out[0].labels == ref_d.labels
    for lab in out[0].labels:
        assert out[0][lab].tau == pytest.approx(ref_d[lab].tau, rel=1e-12)
        assert out[0][lab].gamma == pytest.approx(ref_d[lab].gamma, rel=1e-12)
    np.testing.assert_allclose(usage[0], ref.usage)


def test_consensus_narrows_node_disagreement():
    # two nodes start with different beliefs about the same target
    graph = ring_graph(2)
    sensors = [make_sensor([50_000.0, 0.0]), make_sensor([0.0, 50_000.0])]
    states = [
        one_track_density([0.0, 0.0, 0.0, 0.0], tau=1.0, gamma=0.4),
        one_track_density([3.0, 0.0, 0.0, 0.0], tau=0.1, gamma=1.0),
    ]
    scans = [np.zeros((0, 2))] * 2

    def spread(iterations):
        out, _ = distributed_step(
            states, scans, sensors, quiet_motion(), [None, None], graph, step=1,
            consensus_iterations=iterations, discount=1.0,
        )
        ratios = [np.log(next(iter(d)).gamma / next(iter(d)).tau) for d in out]
        return abs(ratios[0] - ratios[1])

    assert spread(3) <= spread(1) + 1e-12
    assert spread(1) < abs(np.log(0.4) - np.log(10.0))  # already closer than the inputs


def test_distributed_smoke_run_keeps_closure():
    rng = np.random.default_rng(54)
    graph = ring_graph(3)
    sensors = [make_sensor(p) for p in ([500.0, 0.0], [-500.0, 300.0], [0.0, -500.0])]
    motion = cv_motion(1.0, 3.0)
    states = [one_track_density([0.0, 0.0, 2.0, 0.0]) for _ in range(3)]
    for k in range(1, 4):
        scans = [rng.uniform(-400, 400, size=(int(rng.integers(0, 4)), 2)) for _ in range(3)]
        states, usages = distributed_step(
            states, scans, sensors, motion, [None] * 3, graph, step=k,
        )
        assert len(states) == 3 and len(usages) == 3
        for d in states:
            for tr in d:
                assert max(tr.tau, tr.gamma) == pytest.approx(1.0)
    with pytest.raises(TopologyError):
        distributed_step(states[:2], scans, sensors, motion, [None] * 3, graph, step=9)
