"""Single-sensor LMB filtering: prediction arithmetic, update equivalences."""

import math

import numpy as np
import pytest

from plmb import (
    BernoulliTrack,
    BirthModel,
    FilterParams,
    Label,
    LmbDensity,
    MaxMixture,
    MotionModel,
    SensorModel,
    adaptive_birth,
    cv_motion,
    drop_weak_tracks,
    joint_predict_update,
    predict,
    update_detailed,
)
from plmb.errors import InvalidModelError
from plmb.filtering import _UpdateTables

from oracles import random_update_instance, reference_update

# Budgets/thresholds that make the update exhaustive and reduction a no-op.
EXHAUSTIVE = FilterParams(
    max_hypotheses=50_000,
    gate=0.0,
    prune_threshold=0.0,
    merge_threshold=0.0,
    max_components=100_000,
)


def single_track(tau, gamma, mean=(0.0, 0.0, 0.0, 0.0), var=100.0):
    mix = MaxMixture.single(np.asarray(mean, float), var * np.eye(4))
    return LmbDensity([BernoulliTrack(Label(0, 0), tau, gamma, mix)])


def position_sensor(position, fov=1000.0, r=25.0, rate=10.0):
    H = np.hstack([np.eye(2), np.zeros((2, 2))])
    return SensorModel(
        name="s", obs=H, noise=r * np.eye(2), position=np.asarray(position, float),
        fov_scale=fov, clutter_rate=rate,
    )


# ---------------------------------------------------------------------------
# prediction


def test_predict_possibility_arithmetic():
    motion = cv_motion(1.0, 0.0, survival=1.0, death=0.05)
    out = predict(single_track(1.0, 0.5), motion)
    tr = out[Label(0, 0)]
    assert tr.tau == pytest.approx(1.0)
    assert tr.gamma == pytest.approx(0.5)

    out = predict(single_track(0.2, 1.0), motion)
    tr = out[Label(0, 0)]
    assert tr.tau == pytest.approx(0.2)  # death possibility 0.05 stays below
    assert tr.gamma == pytest.approx(1.0)


def test_predict_death_floor_lifts_tau():
    motion = cv_motion(1.0, 0.0, survival=1.0, death=0.3)
    tr = predict(single_track(0.1, 1.0), motion)[Label(0, 0)]
    assert tr.tau == pytest.approx(0.3)


def test_predict_discount_weakens_and_inflates():
    motion = cv_motion(1.0, 2.0, survival=1.0, death=0.04)
    prior = single_track(0.1, 1.0, mean=(0.0, 0.0, 1.0, 0.0))
    half = predict(prior, motion, discount=0.5)[Label(0, 0)]
    assert half.tau == pytest.approx(0.04**0.5)
    assert half.gamma == pytest.approx(1.0)
    F, Q = motion.transition, motion.noise
    P = 100.0 * np.eye(4)
    np.testing.assert_allclose(half.mixture.covs[0], F @ P @ F.T + Q / 0.5, atol=1e-12)
    np.testing.assert_allclose(half.mixture.means[0], [1.0, 0.0, 1.0, 0.0])
    with pytest.raises(InvalidModelError):
        predict(prior, motion, discount=0.0)
    with pytest.raises(InvalidModelError):
        predict(prior, motion, discount=1.5)


def test_predict_appends_birth_tracks():
    motion = cv_motion(1.0, 1.0)
    birth = BirthModel(locations=np.array([[50.0, -50.0]])).fixed_births(step=3)
    out = predict(single_track(1.0, 0.5), motion, birth)
    assert len(out) == 2
    assert out[Label(3, 0)].gamma == pytest.approx(1e-3)
    np.testing.assert_allclose(out[Label(3, 0)].mixture.means[0][:2], [50.0, -50.0])


# ---------------------------------------------------------------------------
# single-association Kalman arithmetic, fully by hand


def test_update_tables_match_hand_kalman():
    mix = MaxMixture.single(np.zeros(4), np.diag([100.0, 100.0, 25.0, 25.0]))
    sensor = position_sensor([600.0, 0.0], fov=1000.0, r=25.0, rate=10.0)
    z = np.array([[10.0, 0.0]])
    tables = _UpdateTables(mix, z, sensor, gate=0.0)

    # innovation covariance 125 I, gain 0.8 on position, 0 on velocity
    post = tables.posterior(1)
    np.testing.assert_allclose(post.means[0], [8.0, 0.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(post.covs[0], np.diag([20.0, 20.0, 25.0, 25.0]), atol=1e-10)
    assert post.weights[0] == pytest.approx(1.0)

    # detection factor: exp(-0.5*100/125) over the clutter possibility at z
    kappa = (
        math.sqrt((2 * math.pi * 25.0) ** 2) * 10.0 / (2 * math.pi * 1000.0**2)
    ) * math.exp(-0.5 * (590.0**2) / 1000.0**2)
    assert tables.eta_det[0] == pytest.approx(math.exp(-0.4) / kappa, rel=1e-12)

    # miss factor: 1 - N(projected mean; sensor, fov^2 I)
    assert tables.eta_miss == pytest.approx(1.0 - math.exp(-0.5 * 0.36), rel=1e-12)

    miss = tables.posterior(0)
    np.testing.assert_allclose(miss.means, mix.means)
    assert miss.weights[0] == pytest.approx(1.0)


def test_detection_scale_possibility_at_three_sigma():
    sensor = position_sensor([0.0, 0.0], fov=1000.0)
    val = sensor.detection_possibility(np.array([3000.0, 0.0]))
    assert val == pytest.approx(math.exp(-4.5), rel=1e-12)


# ---------------------------------------------------------------------------
# update equivalence against exhaustive enumeration


def test_update_matches_brute_force():
    rng = np.random.default_rng(31)
    for _ in range(12):
        d, Z, sensor = random_update_instance(rng)
        tau, gamma, usage, presence = reference_update(d, Z, sensor)
        res = update_detailed(d, Z, sensor, EXHAUSTIVE)
        assert res.density.labels == d.labels
        for lab in d.labels:
            assert res.density[lab].tau == pytest.approx(tau[lab], rel=1e-9)
            assert res.density[lab].gamma == pytest.approx(gamma[lab], rel=1e-9)
        np.testing.assert_allclose(res.usage, usage, rtol=1e-9, atol=1e-12)
        for _ in range(10):
            x = np.concatenate([rng.uniform(-150, 150, 2), rng.uniform(-10, 10, 2)])
            assert res.density.presence_possibility(x) == pytest.approx(
                presence(x), rel=1e-9, abs=1e-12
            )


def test_joint_path_equals_predict_then_update():
    rng = np.random.default_rng(32)
    motion = cv_motion(1.0, 3.0)
    for _ in range(12):
        d, Z, sensor = random_update_instance(rng, n_tracks=int(rng.integers(1, 4)))
        birth = BirthModel(
            locations=rng.uniform(-100, 100, size=(int(rng.integers(0, 3)), 2))
        ).fixed_births(step=5)

        joint = joint_predict_update(d, Z, motion, birth, sensor, EXHAUSTIVE)
        seq = update_detailed(predict(d, motion, birth), Z, sensor, EXHAUSTIVE)

        assert joint.density.labels == seq.density.labels
        for lab in joint.density.labels:
            assert joint.density[lab].tau == pytest.approx(seq.density[lab].tau, rel=1e-9)
            assert joint.density[lab].gamma == pytest.approx(seq.density[lab].gamma, rel=1e-9)
        np.testing.assert_allclose(joint.usage, seq.usage, rtol=1e-9, atol=1e-12)
        for _ in range(5):
            x = np.concatenate([rng.uniform(-150, 150, 2), rng.uniform(-10, 10, 2)])
            assert joint.density.presence_possibility(x) == pytest.approx(
                seq.density.presence_possibility(x), rel=1e-9, abs=1e-12
            )


def test_detection_on_track_suppresses_tau():
    d = single_track(1.0, 1.0, mean=(20.0, -30.0, 0.0, 0.0))
    sensor = position_sensor([500.0, 500.0])
    res = update_detailed(d, np.array([[20.0, -30.0]]), sensor, EXHAUSTIVE)
    tr = res.density[Label(0, 0)]
    assert tr.gamma == pytest.approx(1.0)
    assert tr.tau < 1e-2  # a clean on-track detection is far likelier than clutter
    assert res.usage[0] == pytest.approx(1.0)


def test_empty_scan_close_sensor_erodes_existence():
    near = position_sensor([0.0, 0.0], fov=200.0)
    far = position_sensor([5000.0, 0.0], fov=200.0)
    d = single_track(0.5, 1.0)
    g_near = update_detailed(d, np.zeros((0, 2)), near, EXHAUSTIVE).density[Label(0, 0)].gamma
    g_far = update_detailed(d, np.zeros((0, 2)), far, EXHAUSTIVE).density[Label(0, 0)].gamma
    assert g_near < 0.1  # a miss right under a confident sensor is strong evidence
    assert g_far == pytest.approx(1.0, abs=1e-6)
    assert g_near < g_far


def test_update_empty_density_passthrough():
    sensor = position_sensor([0.0, 0.0])
    res = update_detailed(LmbDensity(), np.array([[1.0, 2.0]]), sensor)
    assert len(res.density) == 0
    np.testing.assert_allclose(res.usage, [0.0])


def test_update_rejects_wrong_measurement_shape():
    sensor = position_sensor([0.0, 0.0])
    with pytest.raises(InvalidModelError):
        update_detailed(single_track(1.0, 1.0), np.ones((2, 3)), sensor)


def test_closure_holds_through_repeated_steps():
    rng = np.random.default_rng(33)
    motion = cv_motion(1.0, 3.0)
    sensor = position_sensor([200.0, 0.0])
    birth = BirthModel(locations=np.array([[0.0, 0.0]]))
    d = LmbDensity()
    for k in range(6):
        d = predict(d, motion, birth.fixed_births(k))
        Z = rng.uniform(-100, 100, size=(int(rng.integers(0, 4)), 2))
        d = update_detailed(d, Z, sensor).density
        for tr in d:
            assert max(tr.tau, tr.gamma) == pytest.approx(1.0)
            assert tr.mixture.weights.max() == pytest.approx(1.0)
        d = drop_weak_tracks(d, 1e-4)


# ---------------------------------------------------------------------------
# birth models


def test_fixed_births_layout():
    birth = BirthModel(locations=np.array([[100.0, 0.0], [-100.0, 50.0]]))
    d = birth.fixed_births(step=7, start_index=2)
    assert d.labels == [Label(7, 2), Label(7, 3)]
    tr = d[Label(7, 3)]
    assert tr.tau == pytest.approx(1.0)
    assert tr.gamma == pytest.approx(1e-3)
    np.testing.assert_allclose(tr.mixture.means[0], [-100.0, 50.0, 0.0, 0.0])


def test_adaptive_birth_spawns_on_unused_measurements():
    birth = BirthModel(mode="adaptive", usage_threshold=0.9)
    Z = np.array([[10.0, 0.0], [200.0, -50.0]])
    d = adaptive_birth(Z, np.array([0.95, 0.2]), birth, step=4, meas_cov=25.0 * np.eye(2))
    assert d.labels == [Label(4, 0)]
    np.testing.assert_allclose(d[Label(4, 0)].mixture.means[0][:2], [200.0, -50.0])
    np.testing.assert_allclose(d[Label(4, 0)].mixture.covs[0][:2, :2], 25.0 * np.eye(2))

    none = adaptive_birth(Z, np.array([0.95, 0.92]), birth, step=4, meas_cov=np.eye(2))
    assert len(none) == 0
    with pytest.raises(InvalidModelError):
        adaptive_birth(Z, np.array([0.5]), birth, step=4, meas_cov=np.eye(2))


# ---------------------------------------------------------------------------
# model validation


def test_motion_model_validation():
    F, Q = np.eye(4), np.eye(4)
    with pytest.raises(InvalidModelError):
        MotionModel(F, Q, survival=0.9, death=0.9)
    with pytest.raises(InvalidModelError):
        MotionModel(F, Q, survival=1.2, death=0.05)
    with pytest.raises(InvalidModelError):
        MotionModel(F, np.eye(3), survival=1.0, death=0.05)
    m = cv_motion(2.0, 1.5)
    np.testing.assert_allclose(m.transition[:2, 2:], 2.0 * np.eye(2))
    assert np.all(np.linalg.eigvalsh(m.noise) > -1e-12)


def test_sensor_model_validation():
    H = np.hstack([np.eye(2), np.zeros((2, 2))])
    with pytest.raises(InvalidModelError):
        SensorModel(name="s", obs=H, noise=np.eye(2), position=np.zeros(2), fov_scale=0.0)
    with pytest.raises(InvalidModelError):
        SensorModel(name="s", obs=H, noise=np.eye(2), position=np.zeros(2), fov_scale=1.0, detect=0.0)
    s = SensorModel(name="s", obs=H, noise=np.eye(2), position=np.zeros(2), fov_scale=10.0)
    assert s.volume == pytest.approx(2 * math.pi * 100.0)


def test_birth_model_validation():
    with pytest.raises(InvalidModelError):
        BirthModel(mode="sometimes")
    with pytest.raises(InvalidModelError):
        BirthModel(gamma_b=0.0)


def test_drop_weak_tracks_filters_by_gamma():
    tracks = [
        BernoulliTrack(Label(0, 0), 1.0, 0.5, MaxMixture.single(np.zeros(4), np.eye(4))),
        BernoulliTrack(Label(0, 1), 1.0, 1e-6, MaxMixture.single(np.ones(4), np.eye(4))),
    ]
    kept = drop_weak_tracks(LmbDensity(tracks), 1e-4)
    assert kept.labels == [Label(0, 0)]
