"""Possibilistic LMB filtering against a single sensor.

Prediction and update both operate on LmbDensity values.  The update expands
the prior into its best label subsets, ranks measurement associations per
subset, and collapses the resulting hypothesis set back to LMB form.  A joint
variant generates posterior hypotheses straight from the prior in one ranked
assignment, which is algebraically identical when budgets are exhaustive.

All spatial computations are Kalman-form and exact for Gaussian max-mixtures:
a detection multiplies each component weight by N(z; H m, H P H' + R) and
conditions its moments; a missed detection multiplies each weight by the
detection-failure possibility at the component mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assignment import ranked_assignments
from .errors import DegenerateUpdateError, InvalidModelError
from .labeled import (
    BernoulliTrack,
    DeltaGlmb,
    GlmbHypothesis,
    Label,
    LmbDensity,
    delta_glmb_to_lmb,
    k_best_subsets,
)
from .maxmix import (
    MaxMixture,
    gaussian_possibility,
    reduce_mixture,
    symmetrize,
    validate_cov,
    validate_psd,
)

LOG_FLOOR = 1e-300  # keeps logarithms finite for vanishing possibilities


@dataclass(frozen=True)
class MotionModel:
    """Linear-Gaussian motion with survival/death possibilities.

    One of survival/death must equal one: either staying or leaving has to be
    fully possible.
    """

    transition: np.ndarray
    noise: np.ndarray
    survival: float = 1.0
    death: float = 0.05

    def __post_init__(self):
        F = np.asarray(self.transition, dtype=float)
        Q = validate_psd(self.noise)
        if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape != Q.shape:
            raise InvalidModelError(f"transition/noise shapes disagree: {F.shape} vs {Q.shape}")
        if not (0.0 < self.survival <= 1.0) or not (0.0 < self.death <= 1.0):
            raise InvalidModelError("survival and death possibilities must lie in (0, 1]")
        if max(self.survival, self.death) < 1.0 - 1e-9:
            raise InvalidModelError("max(survival, death) must equal one")
        object.__setattr__(self, "transition", F)
        object.__setattr__(self, "noise", Q)


def cv_motion(dt: float, sigma_q: float, survival: float = 1.0, death: float = 0.05) -> MotionModel:
    """Planar constant-velocity model on state [x, y, vx, vy]."""
    I2 = np.eye(2)
    F = np.block([[I2, dt * I2], [np.zeros((2, 2)), I2]])
    Q = sigma_q**2 * np.block(
        [[dt**4 / 4 * I2, dt**3 / 2 * I2], [dt**3 / 2 * I2, dt**2 * I2]]
    )
    return MotionModel(F, Q, survival, death)


@dataclass(frozen=True)
class SensorModel:
    """A position sensor with distance-limited detection and local clutter.

    Detection of a target at state x is fully possible (detect = d_s), while
    detection failure has possibility 1 - N(Hx; position, fov_scale^2 I):
    certain right at the sensor and approaching total ignorance far away.
    Clutter is concentrated around the sensor with the same scale.
    """

    name: str
    obs: np.ndarray
    noise: np.ndarray
    position: np.ndarray
    fov_scale: float
    detect: float = 1.0
    clutter_rate: float = 10.0
    volume: float = 0.0  # 0 selects the default 2*pi*fov_scale^2

    def __post_init__(self):
        H = np.asarray(self.obs, dtype=float)
        R = validate_cov(self.noise)
        pos = np.asarray(self.position, dtype=float).reshape(-1)
        if H.ndim != 2 or H.shape[0] != R.shape[0] or H.shape[0] != pos.shape[0]:
            raise InvalidModelError("observation matrix, noise and position disagree in shape")
        if self.fov_scale <= 0.0 or not (0.0 < self.detect <= 1.0):
            raise InvalidModelError("fov_scale must be positive and detect in (0, 1]")
        object.__setattr__(self, "obs", H)
        object.__setattr__(self, "noise", R)
        object.__setattr__(self, "position", pos)
        vol = self.volume if self.volume > 0.0 else 2.0 * math.pi * self.fov_scale**2
        object.__setattr__(self, "volume", float(vol))

    @property
    def fov_cov(self) -> np.ndarray:
        return self.fov_scale**2 * np.eye(self.position.shape[0])

    def detection_possibility(self, z: np.ndarray) -> np.ndarray:
        """N(z; position, fov_scale^2 I) for measurement-space points."""
        return gaussian_possibility(z, self.position, self.fov_cov)

    def miss_possibility(self, z: np.ndarray) -> np.ndarray:
        return 1.0 - self.detection_possibility(z)

    def clutter_possibility(self, z: np.ndarray) -> np.ndarray:
        """Possibility density ratio of clutter at z.

        Scales with sqrt(det(2 pi R)) * clutter_rate / volume, peaked at the
        sensor position with the field-of-view spread.
        """
        scale = math.sqrt(np.linalg.det(2.0 * math.pi * self.noise)) * self.clutter_rate
        return (scale / self.volume) * self.detection_possibility(z)


@dataclass(frozen=True)
class BirthModel:
    """Where and how strongly new tracks are declared.

    In "fixed" mode a small birth track is placed at each configured location
    every step.  In "adaptive" mode births come from measurements whose best
    association possibility in the previous update stayed below
    usage_threshold.
    """

    gamma_b: float = 1e-3
    tau_b: float = 1.0
    mode: str = "fixed"
    locations: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    position_cov: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(2))
    velocity_cov: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(2))
    usage_threshold: float = 0.9

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise InvalidModelError(f"unknown birth mode {self.mode!r}")
        if not (0.0 < self.gamma_b <= 1.0) or not (0.0 < self.tau_b <= 1.0):
            raise InvalidModelError("birth possibilities must lie in (0, 1]")
        object.__setattr__(self, "locations", np.atleast_2d(np.asarray(self.locations, float)))
        object.__setattr__(self, "position_cov", validate_cov(self.position_cov))
        object.__setattr__(self, "velocity_cov", validate_cov(self.velocity_cov))

    def _track(self, step: int, index: int, position: np.ndarray, pos_cov: np.ndarray) -> BernoulliTrack:
        mean = np.concatenate([position, np.zeros(2)])
        cov = np.block(
            [[pos_cov, np.zeros((2, 2))], [np.zeros((2, 2)), self.velocity_cov]]
        )
        return BernoulliTrack(
            Label(step, index), self.tau_b, self.gamma_b, MaxMixture.single(mean, cov)
        )

    def fixed_births(self, step: int, start_index: int = 0) -> LmbDensity:
        return LmbDensity(
            self._track(step, start_index + i, loc, self.position_cov)
            for i, loc in enumerate(self.locations)
        )


def adaptive_birth(
    measurements: np.ndarray,
    usage: np.ndarray,
    birth: BirthModel,
    step: int,
    meas_cov: np.ndarray,
    start_index: int = 0,
) -> LmbDensity:
    """Birth tracks from weakly-used measurements of the previous step.

    A measurement spawns a track when its best association possibility stayed
    below the birth model's usage threshold.  The new track sits at the
    measurement with the measurement-noise position spread and the birth
    velocity prior.
    """
    measurements = np.atleast_2d(np.asarray(measurements, dtype=float))
    usage = np.asarray(usage, dtype=float).reshape(-1)
    if measurements.shape[0] != usage.shape[0]:
        raise InvalidModelError("measurement/usage lengths disagree")
    tracks = []
    idx = start_index
    for z, u in zip(measurements, usage):
        if u < birth.usage_threshold:
            tracks.append(birth._track(step, idx, z, np.asarray(meas_cov, dtype=float)))
            idx += 1
    return LmbDensity(tracks)


@dataclass(frozen=True)
class FilterParams:
    """Knobs shared by every update/fusion step."""

    max_hypotheses: int = 100
    gate: float = 1e-4
    prune_threshold: float = 1e-3
    merge_threshold: float = 0.1
    max_components: int = 30
    track_floor: float = 1e-4
    matching_threshold: float = 1e-2
    duplicate_threshold: float = 0.3


def predict(
    d: LmbDensity,
    motion: MotionModel,
    birth: LmbDensity | None = None,
    discount: float = 1.0,
) -> LmbDensity:
    """One-step prediction of every track plus union with birth tracks.

    Survivors keep their mixture weights; means go through the transition and
    covariances gain the process noise.  Possibilities become

        tau' = max(tau, gamma * death^w),   gamma' = gamma * survival^w

    with w = discount in (0, 1].  A discount below one weakens the transition
    factors and inflates the noise by 1/w, which keeps repeated fusion of the
    same prediction across a network from over-counting it.
    """
    if not (0.0 < discount <= 1.0):
        raise InvalidModelError(f"discount must lie in (0, 1], got {discount}")
    F = motion.transition
    Q = motion.noise / discount
    eta_s = motion.survival**discount
    eta_d = motion.death**discount
    tracks = []
    for tr in d:
        mix = tr.mixture
        means = mix.means @ F.T
        covs = symmetrize(F @ mix.covs @ F.T + Q)
        tracks.append(
            BernoulliTrack(
                tr.label,
                max(tr.tau, tr.gamma * eta_d),
                tr.gamma * eta_s,
                MaxMixture(mix.weights, means, covs, validate=False),
            )
        )
    out = LmbDensity(tracks)
    return out.union(birth) if birth is not None else out


class _UpdateTables:
    """Per-track detection/miss factors against one measurement set.

    For track components (w_c, m_c, P_c) and measurement z_j:

        eta_det[j]  = d_s * max_c w_c N(z_j; H m_c, S_c) / kappa(z_j)
        eta_miss    = max_c w_c d_f(H m_c)

    with the conditioned mixtures built lazily per association.
    """

    def __init__(self, mix: MaxMixture, measurements: np.ndarray, sensor: SensorModel, gate: float):
        H, R = sensor.obs, sensor.noise
        self.mix = mix
        self.z = measurements
        zhat = mix.means @ H.T  # (c, 2)
        S = symmetrize(H @ mix.covs @ H.T + R)  # (c, 2, 2)
        self.zhat, self.S = zhat, S
        self.gain = mix.covs @ H.T @ np.linalg.inv(S)  # (c, 4, 2)
        n = measurements.shape[0]
        if n:
            diff = measurements[None, :, :] - zhat[:, None, :]  # (c, n, 2)
            sol = np.linalg.solve(S[:, None, :, :], diff[..., None])[..., 0]
            self.glik = np.exp(-0.5 * np.einsum("cnd,cnd->cn", diff, sol))  # (c, n)
            self.gated = np.max(self.glik, axis=0) > gate  # (n,)
        else:
            self.glik = np.zeros((mix.size, 0))
            self.gated = np.zeros(0, dtype=bool)

        df = np.atleast_1d(sensor.miss_possibility(zhat))  # (c,)
        miss_w = mix.weights * df
        self.eta_miss = max(float(np.max(miss_w)), LOG_FLOOR)
        self._miss_mix = MaxMixture(
            np.maximum(miss_w, LOG_FLOOR) / self.eta_miss, mix.means, mix.covs, validate=False
        )

        if n:
            kappa = np.maximum(np.atleast_1d(sensor.clutter_possibility(measurements)), LOG_FLOOR)
            peaks = np.max(mix.weights[:, None] * self.glik, axis=0)  # (n,)
            eta = sensor.detect * peaks / kappa
            eta[~self.gated] = 0.0
            self.eta_det = eta
        else:
            self.eta_det = np.zeros(0)
        self._det_cache: dict[int, MaxMixture] = {}
        self._H = H
        self._R = R

    def log_eta_det(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.eta_det)

    def log_eta_miss(self) -> float:
        return math.log(self.eta_miss)

    def posterior(self, j: int) -> MaxMixture:
        """Conditioned mixture for association j (0 = miss, 1-based detection)."""
        if j == 0:
            return self._miss_mix
        cached = self._det_cache.get(j)
        if cached is not None:
            return cached
        z = self.z[j - 1]
        mix = self.mix
        innov = z[None, :] - self.zhat  # (c, 2)
        means = mix.means + np.einsum("cij,cj->ci", self.gain, innov)
        IKH = np.eye(mix.dim)[None, :, :] - self.gain @ self._H
        covs = IKH @ mix.covs @ np.swapaxes(IKH, 1, 2) + self.gain @ self._R @ np.swapaxes(
            self.gain, 1, 2
        )
        w = mix.weights * self.glik[:, j - 1]
        top = max(float(np.max(w)), LOG_FLOOR)
        out = MaxMixture(np.maximum(w, LOG_FLOOR) / top, means, symmetrize(covs), validate=False)
        self._det_cache[j] = out
        return out


@dataclass
class UpdateResult:
    density: LmbDensity
    usage: np.ndarray
    hypotheses: DeltaGlmb | None = None


def _collapse(
    raw_hyps: list[tuple[float, tuple[Label, ...], dict[Label, int]]],
    tables: dict[Label, _UpdateTables],
    fallback: dict[Label, MaxMixture],
    n_meas: int,
    params: FilterParams,
    keep_hypotheses: bool,
) -> UpdateResult:
    """Normalise hypothesis weights, collapse to LMB form, reduce mixtures."""
    if not raw_hyps:
        raise DegenerateUpdateError("no association hypothesis survived the update")
    top = max(lw for lw, _, _ in raw_hyps)
    hyps = []
    for lw, labs, assoc in raw_hyps:
        hyps.append(
            GlmbHypothesis(
                labels=labs,
                assoc=assoc,
                weight=math.exp(lw - top),
                mixtures={lab: tables[lab].posterior(assoc[lab]) for lab in labs},
            )
        )
    glmb = DeltaGlmb(hyps)

    usage = np.zeros(n_meas)
    for h in glmb.hypotheses:
        for j in h.assoc.values():
            if j and h.weight > usage[j - 1]:
                usage[j - 1] = h.weight

    lmb = delta_glmb_to_lmb(glmb, fallback=fallback)
    reduced = LmbDensity(
        replace(
            tr,
            mixture=reduce_mixture(
                tr.mixture,
                params.prune_threshold,
                params.merge_threshold,
                params.max_components,
            ),
        )
        for tr in lmb
    )
    return UpdateResult(reduced, usage, glmb if keep_hypotheses else None)


def update_detailed(
    d: LmbDensity,
    measurements: np.ndarray,
    sensor: SensorModel,
    params: FilterParams = FilterParams(),
    keep_hypotheses: bool = False,
) -> UpdateResult:
    """Measurement update of a predicted LMB density against one sensor scan.

    The prior is expanded into its best label subsets; each subset gets a
    ranked-assignment budget proportional to its weight (at least one), and
    every returned association becomes a posterior hypothesis with weight

        w+ (subset) * prod_l eta(l, theta(l)).

    Weights are normalised to a best of one, collapsed back to LMB form, and
    per-track mixtures are pruned/merged/capped.
    """
    measurements = _as_measurements(measurements, sensor)
    n = measurements.shape[0]
    if not len(d):
        return UpdateResult(LmbDensity(), np.zeros(n), None)

    tables = {lab: _UpdateTables(d[lab].mixture, measurements, sensor, params.gate) for lab in d.labels}
    subsets = list(k_best_subsets(d, params.max_hypotheses))
    lin = np.array([math.exp(lw) for lw, _ in subsets])
    budgets = np.maximum(1, np.floor(params.max_hypotheses * lin / np.sum(lin)).astype(int))

    raw: list[tuple[float, tuple[Label, ...], dict[Label, int]]] = []
    for (logw, mask), k_h in zip(subsets, budgets):
        labs = tuple(lab for lab, inc in zip(d.labels, mask) if inc)
        m = len(labs)
        if m == 0:
            raw.append((logw, labs, {}))
            continue
        cost = np.full((m, n + m), np.inf)
        for r, lab in enumerate(labs):
            cost[r, :n] = -tables[lab].log_eta_det()
            cost[r, n + r] = -tables[lab].log_eta_miss()
        for cols, total in ranked_assignments(cost, int(k_h)):
            assoc = {lab: (int(c) + 1 if c < n else 0) for lab, c in zip(labs, cols)}
            raw.append((logw - total, labs, assoc))

    fallback = {lab: d[lab].mixture for lab in d.labels}
    return _collapse(raw, tables, fallback, n, params, keep_hypotheses)


def update(
    d: LmbDensity,
    measurements: np.ndarray,
    sensor: SensorModel,
    params: FilterParams = FilterParams(),
) -> LmbDensity:
    return update_detailed(d, measurements, sensor, params).density


def joint_predict_update(
    d: LmbDensity,
    measurements: np.ndarray,
    motion: MotionModel,
    birth: LmbDensity | None,
    sensor: SensorModel,
    params: FilterParams = FilterParams(),
    discount: float = 1.0,
    keep_hypotheses: bool = False,
) -> UpdateResult:
    """Prediction and update in one ranked assignment over the prior tracks.

    Each track row chooses between detection columns (existence and
    association factors), a miss column (existence, no detection) and a
    non-existence column.  With exhaustive budgets this produces exactly the
    hypotheses of predict() followed by update_detailed().
    """
    predicted = predict(d, motion, birth, discount=discount)
    measurements = _as_measurements(measurements, sensor)
    n = measurements.shape[0]
    if not len(predicted):
        return UpdateResult(LmbDensity(), np.zeros(n), None)

    labels = predicted.labels
    m = len(labels)
    tables = {lab: _UpdateTables(predicted[lab].mixture, measurements, sensor, params.gate) for lab in labels}

    cost = np.full((m, n + 2 * m), np.inf)
    for r, lab in enumerate(labels):
        tr = predicted[lab]
        lg = math.log(max(tr.gamma, LOG_FLOOR))
        cost[r, :n] = -(lg + tables[lab].log_eta_det())
        cost[r, n + r] = -(lg + tables[lab].log_eta_miss())
        cost[r, n + m + r] = -math.log(max(tr.tau, LOG_FLOOR))

    raw: list[tuple[float, tuple[Label, ...], dict[Label, int]]] = []
    for cols, total in ranked_assignments(cost, params.max_hypotheses):
        labs = tuple(lab for lab, c in zip(labels, cols) if c < n + m)
        assoc = {
            lab: (int(c) + 1 if c < n else 0) for lab, c in zip(labels, cols) if c < n + m
        }
        raw.append((-total, labs, assoc))

    fallback = {lab: predicted[lab].mixture for lab in labels}
    return _collapse(raw, tables, fallback, n, params, keep_hypotheses)


def drop_weak_tracks(d: LmbDensity, floor: float) -> LmbDensity:
    """Remove tracks whose existence possibility fell below `floor`."""
    return LmbDensity(tr for tr in d if tr.gamma >= floor)


def _as_measurements(measurements, sensor: SensorModel) -> np.ndarray:
    z = np.asarray(measurements, dtype=float)
    dim = sensor.obs.shape[0]
    if z.size == 0:
        return np.zeros((0, dim))
    z = np.atleast_2d(z)
    if z.shape[1] != dim:
        raise InvalidModelError(f"measurements must have dimension {dim}, got {z.shape}")
    return z
