"""One sensor, one target, clutter: watch a track get born and confirmed.

The track's state is the pair (tau, gamma) = (possibility it does NOT exist,
possibility it DOES exist), one of which is always 1.  A fresh birth starts
at tau = 1, gamma = 1e-3 ("probably nothing there").  Detections push gamma
up and tau down; once tau < 1 the track is more credible present than absent.
"""

import numpy as np

from plmb import (
    BirthModel,
    FilterParams,
    LmbDensity,
    SensorModel,
    cv_motion,
    drop_weak_tracks,
    map_estimate,
    predict,
    update,
)

rng = np.random.default_rng(7)
dt = 1.0
motion = cv_motion(dt, sigma_q=3.0)
H = np.hstack([np.eye(2), np.zeros((2, 2))])
sensor = SensorModel(
    name="s0",
    obs=H,
    noise=25.0 * np.eye(2),
    position=np.zeros(2),
    fov_scale=1000.0,
    clutter_rate=5.0,
)
birth = BirthModel(locations=np.array([[200.0, 100.0]]))
params = FilterParams()

target = np.array([200.0, 100.0, -8.0, -4.0])
density = LmbDensity()

print("step  tau      gamma    #meas  estimate")
for k in range(1, 16):
    target[:2] += target[2:] * dt
    p_d = np.exp(-0.5 * np.sum(target[:2] ** 2) / sensor.fov_scale**2)
    detections = []
    if rng.random() < p_d:
        detections.append(target[:2] + rng.normal(scale=5.0, size=2))
    n_clutter = rng.poisson(sensor.clutter_rate)
    for _ in range(n_clutter):
        detections.append(sensor.position + rng.normal(scale=sensor.fov_scale, size=2))
    Z = np.array(detections) if detections else np.zeros((0, 2))

    density = predict(density, motion, birth.fixed_births(k))
    density = update(density, Z, sensor, params)
    density = drop_weak_tracks(density, params.track_floor)

    tr = next(iter(density), None)
    est = map_estimate(density)
    where = np.round(est[0][1][:2], 1) if est else "--"
    if tr is not None:
        print(f"{k:4d}  {tr.tau:.5f}  {tr.gamma:.5f}  {len(Z):4d}   {where}")

print("\ntrue final position:", np.round(target[:2], 1))
