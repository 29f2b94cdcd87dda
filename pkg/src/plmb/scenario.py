"""Simulation scenarios: configuration, ground truth and synthetic scans.

Two stock scenarios are provided.  Case A places four static sensors at the
corners of a square region and three targets born at fixed locations and
times, one of which disappears mid-run.  Case B scatters moving sensors with
tighter fields of view over the same region and spawns targets at random
until a cutoff step.

The configuration is a flat dataclass; a plain "key = value" text file with
the same field names overrides any subset of it.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidModelError
from .filtering import BirthModel, MotionModel, SensorModel, cv_motion


@dataclass(frozen=True)
class ScenarioConfig:
    """Flat simulation and filter configuration (field names = config keys)."""

    case: str = "A"
    steps: int = 100
    dt: float = 1.0
    area_half: float = 1000.0
    seed: int = 0
    mc_runs: int = 1

    # Sensors.
    n_sensors: int = 4
    sigma_r: float = 5.0
    lambda_fa: float = 10.0
    sigma_s: float = 1000.0
    sensor_speed: float = 50.0
    clutter_volume: float = 0.0  # 0 -> 2*pi*sigma_s^2

    # Target dynamics (filter model and truth).
    sigma_q: float = 5.0
    truth_sigma_q: float = 0.0
    survival: float = 1.0
    death: float = 0.05
    target_speed: float = 10.0
    birth_steps: tuple[int, ...] = (1, 10, 20)
    death_step: int = 50
    death_target: int = 0
    lambda_b: float = 0.3
    sigma_v: float = 3.0
    birth_cutoff: int = 30

    # Birth model.
    birth_mode: str = "fixed"
    gamma_b: float = 1e-3
    tau_b: float = 1.0
    usage_threshold: float = 0.9
    birth_pos_std: float = 10.0
    birth_vel_std: float = 10.0

    # Filter/fusion knobs.
    max_hypotheses: int = 100
    gate: float = 1e-4
    prune_threshold: float = 1e-3
    merge_threshold: float = 0.1
    max_components: int = 30
    track_floor: float = 1e-4
    matching_threshold: float = 1e-2
    duplicate_threshold: float = 0.3
    fusion_mode: str = "consensus"
    consensus_iterations: int = 3
    topology: str = "ring"

    # Prediction discount for distributed nodes; 0 selects the automatic
    # 1/|V_i| neighbourhood value.  The default keeps the transition at full
    # strength: Metropolis weights sum to one, so the shared prior is already
    # counted exactly once in consensus, while a fractional exponent on the
    # death possibility (0.05^(1/3) ~ 0.37) re-floors tau every step and
    # un-confirms tracks after a couple of missed detections.
    discount: float = 1.0

    # Tracks wandering this factor beyond the area are discarded (<= 0 keeps
    # them; clutter far from every sensor is unexplainable under the clutter
    # model and can confirm runaway tracks that no sensor can then refute).
    escape_margin: float = 1.25

    # Metrics.
    ospa_cutoff: float = 100.0
    ospa_order: float = 2.0
    ospa2_window: int = 10

    @classmethod
    def for_case(cls, case: str, **overrides) -> "ScenarioConfig":
        case = case.upper()
        if case == "A":
            base = {}
        elif case == "B":
            base = {"sigma_s": 500.0, "birth_mode": "adaptive"}
        else:
            raise InvalidModelError(f"unknown case {case!r} (expected A or B)")
        base.update(overrides)
        return cls(case=case, **base)

    # Derived model builders ------------------------------------------------

    def motion_model(self) -> MotionModel:
        return cv_motion(self.dt, self.sigma_q, self.survival, self.death)

    def measurement_noise(self) -> np.ndarray:
        return self.sigma_r**2 * np.eye(2)

    def obs_matrix(self) -> np.ndarray:
        return np.hstack([np.eye(2), np.zeros((2, 2))])

    def sensor_model(self, index: int, position: np.ndarray) -> SensorModel:
        return SensorModel(
            name=f"s{index}",
            obs=self.obs_matrix(),
            noise=self.measurement_noise(),
            position=np.asarray(position, dtype=float),
            fov_scale=self.sigma_s,
            clutter_rate=self.lambda_fa,
            volume=self.clutter_volume,
        )

    def birth_model(self) -> BirthModel:
        return BirthModel(
            gamma_b=self.gamma_b,
            tau_b=self.tau_b,
            mode=self.birth_mode,
            locations=self.birth_locations(),
            position_cov=self.birth_pos_std**2 * np.eye(2),
            velocity_cov=self.birth_vel_std**2 * np.eye(2),
            usage_threshold=self.usage_threshold,
        )

    def birth_locations(self) -> np.ndarray:
        a = 0.8 * self.area_half
        return np.array([[a, 0.5 * self.area_half], [-a, 0.5 * self.area_half], [0.0, -a]])

    def corner_positions(self) -> np.ndarray:
        a = self.area_half
        corners = np.array([[a, a], [-a, a], [a, -a], [-a, -a]], dtype=float)
        if self.n_sensors <= 4:
            return corners[: self.n_sensors]
        reps = [corners[i % 4] for i in range(self.n_sensors)]
        return np.array(reps)


CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _parse_value(name: str, text: str):
    ftype = CONFIG_TYPES[name]
    text = text.strip()
    if ftype == "int":
        return int(text)
    if ftype == "float":
        return float(text)
    if ftype == "str":
        return text
    if ftype.startswith("tuple"):
        return tuple(int(p) for p in text.replace(",", " ").split())
    raise InvalidModelError(f"cannot parse config field {name} of type {ftype}")


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a flat 'key = value' config file; keys mirror ScenarioConfig fields."""
    overrides = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidModelError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_TYPES:
            raise InvalidModelError(f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = _parse_value(key, value)
    if base is not None:
        return dataclasses.replace(base, **overrides)
    case = overrides.pop("case", "A")
    return ScenarioConfig.for_case(case, **overrides)


def save_config(cfg: ScenarioConfig, path) -> None:
    lines = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        lines.append(f"{f.name} = {val}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class Truth:
    """Ground truth of one run: per-step target ids/states and sensor tracks."""

    steps: int
    ids: list[list[int]]  # ids[k] for k = 1..steps (index 0 unused)
    states: list[np.ndarray]  # states[k] is (len(ids[k]), 4)
    sensor_positions: np.ndarray  # (steps + 1, n_sensors, 2)

    def positions(self, k: int) -> np.ndarray:
        return self.states[k][:, :2] if len(self.ids[k]) else np.zeros((0, 2))

    def cardinality(self, k: int) -> int:
        return len(self.ids[k])

    def track_histories(self) -> dict[int, dict[int, np.ndarray]]:
        out: dict[int, dict[int, np.ndarray]] = {}
        for k in range(1, self.steps + 1):
            for i, tid in enumerate(self.ids[k]):
                out.setdefault(tid, {})[k] = self.states[k][i, :2]
        return out


def _bounce(pos: np.ndarray, vel: np.ndarray, half: float, rng: np.random.Generator):
    """Turn +-90 degrees when the next step would leave the area."""
    nxt = pos + vel
    if np.all(np.abs(nxt) <= half):
        return nxt, vel
    sign = 1.0 if rng.random() < 0.5 else -1.0
    rot = np.array([[0.0, -sign], [sign, 0.0]])
    vel = rot @ vel
    nxt = np.clip(pos + vel, -half, half)
    return nxt, vel


def generate_truth(cfg: ScenarioConfig, rng: np.random.Generator) -> Truth:
    """Simulate target and sensor trajectories for one run.

    Case A: fixed corner sensors; three targets head for the centre at
    target_speed from the stock birth locations, born at birth_steps, and
    target `death_target` disappears at death_step.

    Case B: sensors start uniformly in the area with uniform headings at
    sensor_speed, bouncing off the boundary; a Poisson(lambda_b) number of
    targets is born each step until birth_cutoff, uniformly positioned with
    Gaussian velocities.  Targets reflect at the area boundary so bookkeeping
    stays inside it.
    """
    K, half = cfg.steps, cfg.area_half
    dt = cfg.dt

    # Sensor tracks first so the RNG stream layout is stable.
    n_s = cfg.n_sensors
    sensor_pos = np.zeros((K + 1, n_s, 2))
    if cfg.case == "A":
        sensor_pos[:] = cfg.corner_positions()[None, :, :]
    else:
        pos = rng.uniform(-half, half, size=(n_s, 2))
        headings = rng.uniform(0.0, 2.0 * math.pi, size=n_s)
        vel = cfg.sensor_speed * np.stack([np.cos(headings), np.sin(headings)], axis=1) * dt
        sensor_pos[0] = sensor_pos[1] = pos
        for k in range(2, K + 1):
            for s in range(n_s):
                pos_s, vel_s = _bounce(sensor_pos[k - 1, s], vel[s], half, rng)
                sensor_pos[k, s] = pos_s
                vel[s] = vel_s

    # Target births.
    births: list[tuple[int, np.ndarray]] = []  # (birth step, initial state)
    if cfg.case == "A":
        for i, (loc, k0) in enumerate(zip(cfg.birth_locations(), cfg.birth_steps)):
            direction = -loc / np.linalg.norm(loc)
            state = np.concatenate([loc, cfg.target_speed * direction])
            births.append((k0, state))
    else:
        for k0 in range(1, min(cfg.birth_cutoff, K) + 1):
            for _ in range(rng.poisson(cfg.lambda_b)):
                p = rng.uniform(-half, half, size=2)
                v = rng.normal(0.0, cfg.sigma_v, size=2)
                births.append((k0, np.concatenate([p, v])))

    F = cv_motion(dt, max(cfg.truth_sigma_q, 1e-12)).transition
    ids: list[list[int]] = [[] for _ in range(K + 1)]
    states: list[np.ndarray] = [np.zeros((0, 4)) for _ in range(K + 1)]
    alive: dict[int, np.ndarray] = {}
    for k in range(1, K + 1):
        for tid, (k0, s0) in enumerate(births):
            if k0 == k:
                alive[tid] = s0.copy()
        if cfg.case == "A" and k >= cfg.death_step and cfg.death_target in alive:
            del alive[cfg.death_target]
        if k > 1:
            for tid in list(alive):
                if births[tid][0] == k:
                    continue  # born this step, no propagation yet
                s = F @ alive[tid]
                if cfg.truth_sigma_q > 0.0:
                    s = s + _process_noise(cfg, rng)
                # Reflect at the boundary: flip the offending velocity component.
                for axis in range(2):
                    if abs(s[axis]) > half:
                        s[axis] = np.sign(s[axis]) * (2 * half) - s[axis]
                        s[axis + 2] = -s[axis + 2]
                alive[tid] = s
        ids[k] = sorted(alive)
        states[k] = (
            np.stack([alive[tid] for tid in ids[k]]) if ids[k] else np.zeros((0, 4))
        )
    return Truth(K, ids, states, sensor_pos)


def _process_noise(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    dt = cfg.dt
    q = cfg.truth_sigma_q
    a = rng.normal(0.0, q, size=2)  # white acceleration per axis
    return np.concatenate([0.5 * dt**2 * a, dt * a])


def generate_measurements(
    cfg: ScenarioConfig, truth: Truth, rng: np.random.Generator
) -> list[list[np.ndarray]]:
    """Per-step, per-sensor scans: distance-gated detections plus local clutter.

    A target at position p is detected by the sensor at q with probability
    exp(-|p - q|^2 / (2 sigma_s^2)); detections carry sigma_r noise.  Clutter
    counts are Poisson(lambda_fa) with points drawn around the sensor with
    sigma_s spread.
    """
    scans: list[list[np.ndarray]] = [[] for _ in range(truth.steps + 1)]
    for k in range(1, truth.steps + 1):
        pts = truth.positions(k)
        for s in range(cfg.n_sensors):
            q = truth.sensor_positions[k, s]
            collected = []
            if pts.shape[0]:
                d2 = np.sum((pts - q) ** 2, axis=1)
                pd = np.exp(-0.5 * d2 / cfg.sigma_s**2)
                hits = rng.random(pts.shape[0]) < pd
                if np.any(hits):
                    noise = rng.normal(0.0, cfg.sigma_r, size=(int(hits.sum()), 2))
                    collected.append(pts[hits] + noise)
            n_c = rng.poisson(cfg.lambda_fa)
            if n_c:
                collected.append(q + rng.normal(0.0, cfg.sigma_s, size=(n_c, 2)))
            scans[k].append(
                np.vstack(collected) if collected else np.zeros((0, 2))
            )
    return scans
