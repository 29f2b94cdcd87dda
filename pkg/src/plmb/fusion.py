"""Fusing labeled multi-Bernoulli densities across sensors.

Pairwise fusion of two tracks with exponents (wa, wb) forms the weighted
product of their spatial mixtures and rescales the existence pair:

    eta_f  = sup_x f_a(x)^wa f_b(x)^wb
    tau~   = tau_a^wa tau_b^wb
    gamma~ = gamma_a^wa gamma_b^wb eta_f

normalised so max(tau~, gamma~) = 1.  Densities sharing a label space fold
label-by-label; densities with unrelated label spaces are matched first by a
minimum-cost assignment between their tracks, with unmatched tracks fused
against a missed-detection Bernoulli (uniform spatial possibility).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .assignment import ranked_assignments
from .errors import InvalidModelError
from .filtering import FilterParams, SensorModel
from .labeled import BernoulliTrack, Label, LmbDensity
from .maxmix import (
    MaxMixture,
    mixture_power,
    normalize,
    reduce_mixture,
    supremum,
    weighted_product,
)

ETA_FLOOR = 1e-300

# Added to miss-column costs so that any gated pair is matched in preference
# to a miss; large enough to outweigh any sum of pair costs (each bounded by
# -3 ln(1e-9) ~ 62) for densities of realistic size.
MISS_PENALTY = 1e5


@dataclass(frozen=True)
class FusionWeights:
    """Exponents applied to the fused densities.

    mode "independent" treats every input as independent evidence (largest
    weight must be one, the natural choice being all ones); mode "consensus"
    averages (weights sum to one), which never over-counts shared priors.
    """

    values: tuple[float, ...]
    mode: str = "independent"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or any(v <= 0.0 for v in vals):
            raise InvalidModelError("fusion weights must be positive")
        if self.mode == "independent":
            if abs(max(vals) - 1.0) > 1e-9:
                raise InvalidModelError("independent-mode weights must have max one")
        elif self.mode == "consensus":
            if abs(sum(vals) - 1.0) > 1e-9:
                raise InvalidModelError("consensus-mode weights must sum to one")
        else:
            raise InvalidModelError(f"unknown fusion mode {self.mode!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def independent(cls, n: int) -> "FusionWeights":
        return cls((1.0,) * n, "independent")

    @classmethod
    def consensus(cls, n: int) -> "FusionWeights":
        return cls((1.0 / n,) * n, "consensus")


def fuse_tracks(a: BernoulliTrack, b: BernoulliTrack, wa: float, wb: float) -> BernoulliTrack:
    """Fuse two tracks of the same target; the result keeps a's label."""
    raw = weighted_product(a.mixture, wa, b.mixture, wb)
    eta_f = max(supremum(raw), ETA_FLOOR)
    tau = a.tau**wa * b.tau**wb
    gamma = a.gamma**wa * b.gamma**wb * eta_f
    norm = max(tau, gamma)
    return BernoulliTrack(a.label, tau / norm, gamma / norm, normalize(raw))


def _pad_track(label: Label, source: BernoulliTrack) -> BernoulliTrack:
    """Stand-in for a label one side never saw: near-certain absence, vague shape."""
    mix = source.mixture
    vague = MaxMixture(mix.weights, mix.means, mix.covs * 10.0, validate=False)
    return BernoulliTrack(label, 1.0, 1e-9, vague)


def fuse_lmb_shared_labels(
    densities: list[LmbDensity],
    weights: FusionWeights,
    params: FilterParams = FilterParams(),
) -> LmbDensity:
    """Fold densities over a shared label space, label by label.

    The first pair consumes the first two exponents; every later fold applies
    exponent one to the accumulated density, so the final mixture equals the
    full product prod_i f_i^w_i normalised by its supremum.  A label missing
    from one input is padded with a non-informative track.  Mixtures are
    reduced after every fold.
    """
    if len(densities) != len(weights.values):
        raise InvalidModelError(
            f"{len(densities)} densities but {len(weights.values)} fusion weights"
        )
    all_labels = sorted(set().union(*[set(d.labels) for d in densities]))

    def track_of(d: LmbDensity, lab: Label) -> BernoulliTrack:
        if lab in d.tracks:
            return d[lab]
        donor = next(dd[lab] for dd in densities if lab in dd.tracks)
        return _pad_track(lab, donor)

    w0 = weights.values[0]
    acc: dict[Label, BernoulliTrack] = {}
    for lab in all_labels:
        tr = track_of(densities[0], lab)
        powed = normalize(mixture_power(tr.mixture, w0)) if w0 != 1.0 else tr.mixture
        tau, gamma = tr.tau**w0, tr.gamma**w0
        norm = max(tau, gamma)
        acc[lab] = BernoulliTrack(lab, tau / norm, gamma / norm, powed)

    for d, w in zip(densities[1:], weights.values[1:]):
        for lab in all_labels:
            fused = fuse_tracks(acc[lab], track_of(d, lab), 1.0, w)
            acc[lab] = replace(
                fused,
                mixture=reduce_mixture(
                    fused.mixture,
                    params.prune_threshold,
                    params.merge_threshold,
                    params.max_components,
                ),
            )
    return LmbDensity(acc.values())


@dataclass(frozen=True)
class MissedDetectionModel:
    """Bernoulli stand-in for a track the other node failed to report.

    Non-existence possibility r0, existence scale r1, and a uniform spatial
    possibility.  When a sensor model is supplied the existence side is
    damped by that sensor's detection-failure possibility at the track's
    dominant mean: an unreported track deep inside the receiver's field of
    view is suspicious, one far outside is not.
    """

    r0: float = 1.0
    r1: float = 1.0
    sensor: SensorModel | None = None

    def gamma_phi(self, track: BernoulliTrack) -> float:
        g = self.r1
        if self.sensor is not None:
            pos = track.mixture.dominant_mean() @ self.sensor.obs.T
            g *= float(self.sensor.miss_possibility(pos))
        return max(g, ETA_FLOOR)


def _sup_product_matrix(
    ta: list[BernoulliTrack], wa: float, tb: list[BernoulliTrack], wb: float
) -> np.ndarray:
    """eta[i, j] = sup_x f_i(x)^wa f_j(x)^wb for every track pair.

    The supremum of a weighted product mixture is its largest component
    weight, w_p^wa w_q^wb N(mu_p; mu_q, P_p/wa + P_q/wb), so it can be read
    off all component pairs at once without assembling any product mixture.
    """
    ma = np.concatenate([t.mixture.means for t in ta], axis=0)
    Pa = np.concatenate([t.mixture.covs for t in ta], axis=0) / wa
    la = wa * np.concatenate([np.log(t.mixture.weights) for t in ta])
    mb = np.concatenate([t.mixture.means for t in tb], axis=0)
    Pb = np.concatenate([t.mixture.covs for t in tb], axis=0) / wb
    lb = wb * np.concatenate([np.log(t.mixture.weights) for t in tb])

    logw = np.empty((la.size, lb.size))
    # Chunk the a-side so the (chunk, nb, d, d) solve stays small.
    chunk = max(1, int(2e5 / max(lb.size, 1)))
    for s in range(0, la.size, chunk):
        e = min(s + chunk, la.size)
        Psum = Pa[s:e, None] + Pb[None, :]
        diff = ma[s:e, None, :] - mb[None, :, :]
        sol = np.linalg.solve(Psum, diff[..., None])[..., 0]
        q = np.einsum("abd,abd->ab", diff, sol)
        logw[s:e] = la[s:e, None] + lb[None, :] - 0.5 * q

    ofs_a = np.cumsum([0] + [len(t.mixture) for t in ta])
    ofs_b = np.cumsum([0] + [len(t.mixture) for t in tb])
    eta = np.empty((len(ta), len(tb)))
    for i in range(len(ta)):
        block = logw[ofs_a[i] : ofs_a[i + 1]]
        for j in range(len(tb)):
            eta[i, j] = block[:, ofs_b[j] : ofs_b[j + 1]].max()
    return np.exp(eta)


def merge_duplicate_tracks(d: LmbDensity, threshold: float) -> LmbDensity:
    """Drop tracks that coincide with a stronger track in the same density.

    A consensus fold can split one object into two coincident tracks: an
    association conflict leaves a copy unmatched and the output union keeps
    it.  The copies then compete for every later detection (associations are
    injective), so each hovers at partial existence and the object is never
    reported.  Both copies carry the same shared measurement history, so the
    idempotent resolution is to keep the strongest claim: tracks whose
    agreement sup_x f_i f_j reaches `threshold` are grouped and only the
    group's largest gamma/tau survives.  Well-separated targets are far below
    any sensible threshold (two tracks 30 m apart with ~100 m^2 spreads agree
    at ~0.1), so only genuine copies are absorbed.
    """
    if threshold <= 0.0 or len(d) < 2:
        return d
    tracks = sorted(d, key=lambda t: t.gamma / t.tau, reverse=True)
    eta = _sup_product_matrix(tracks, 1.0, tracks, 1.0)
    keep, absorbed = [], set()
    for i, tr in enumerate(tracks):
        if i in absorbed:
            continue
        keep.append(tr)
        for j in range(i + 1, len(tracks)):
            if j not in absorbed and eta[i, j] >= threshold:
                absorbed.add(j)
    return LmbDensity(keep)


def match_and_fuse(
    a: LmbDensity,
    b: LmbDensity,
    wa: float,
    wb: float,
    missed: MissedDetectionModel = MissedDetectionModel(),
    matching_threshold: float = 1e-2,
    label_time: int = 0,
    params: FilterParams = FilterParams(),
    missed_b: MissedDetectionModel | None = None,
) -> LmbDensity:
    """Fuse two densities whose label spaces are unrelated.

    Labels are stripped; an assignment between a's m tracks and b's n tracks
    plus m per-track miss columns minimises

        C(i, j) = -ln(gamma_a_i gamma_b_j eta_f(i, j)),   eta_f gated below
        C(i, phi_i) = -ln(gamma_a_i gamma_phi(i)) + penalty

    A pair is associable only when its mixture agreement eta_f reaches
    matching_threshold; the miss penalty makes any associable pair beat a
    miss, so the threshold decides who can merge and the costs only arbitrate
    conflicts.  Without the penalty two weak coincident tracks (e.g. the same
    unconfirmed birth held by both nodes) would each take their miss column
    and the duplicate would survive every consensus sweep.

    Matched pairs fuse normally; unmatched tracks on either side fuse against
    the missed-detection Bernoulli: `missed` models the b-side source failing
    to report an a-side track, `missed_b` (defaults to `missed`) the reverse.
    The exponent applies to the track's own possibilities (information that
    may already be shared) while the miss factor r1*d_f enters at full power:
    like a measurement factor it is fresh evidence from the reporting node,
    and discounting it lets unsupported tracks ratchet upward through
    repeated sub-unit exponents.  Every output track gets a fresh label
    (label_time, index).
    """
    if missed_b is None:
        missed_b = missed
    ta, tb = list(a), list(b)
    m, n = len(ta), len(tb)
    if m == 0 and n == 0:
        return LmbDensity()

    eta = _sup_product_matrix(ta, wa, tb, wb) if m and n else np.zeros((m, n))

    fused: list[BernoulliTrack] = []
    matched_b: set[int] = set()
    if m:
        cost = np.full((m, n + m), np.inf)
        for i, tri in enumerate(ta):
            for j, trj in enumerate(tb):
                if eta[i, j] >= matching_threshold:
                    cost[i, j] = -(
                        math.log(tri.gamma) + math.log(trj.gamma) + math.log(max(eta[i, j], ETA_FLOOR))
                    )
            cost[i, n + i] = MISS_PENALTY - (
                math.log(tri.gamma) + math.log(missed.gamma_phi(tri))
            )
        cols = ranked_assignments(cost, 1)[0][0]
        for i, c in enumerate(cols):
            tri = ta[i]
            if c < n:
                j = int(c)
                matched_b.add(j)
                raw = weighted_product(tri.mixture, wa, tb[j].mixture, wb)
                eta_f = max(eta[i, j], ETA_FLOOR)
                tau = tri.tau**wa * tb[j].tau**wb
                gamma = tri.gamma**wa * tb[j].gamma**wb * eta_f
                norm = max(tau, gamma)
                fused.append(BernoulliTrack(tri.label, tau / norm, gamma / norm, normalize(raw)))
            else:
                tau = tri.tau**wa * missed.r0
                gamma = tri.gamma**wa * missed.gamma_phi(tri)
                norm = max(tau, gamma)
                mix = normalize(mixture_power(tri.mixture, wa)) if wa != 1.0 else tri.mixture
                fused.append(BernoulliTrack(tri.label, tau / norm, gamma / norm, mix))

    for j, trj in enumerate(tb):
        if j in matched_b:
            continue
        tau = missed_b.r0 * trj.tau**wb
        gamma = missed_b.gamma_phi(trj) * trj.gamma**wb
        norm = max(tau, gamma)
        mix = normalize(mixture_power(trj.mixture, wb)) if wb != 1.0 else trj.mixture
        fused.append(BernoulliTrack(trj.label, tau / norm, gamma / norm, mix))

    out = []
    for idx, tr in enumerate(fused):
        out.append(
            BernoulliTrack(
                Label(label_time, idx),
                tr.tau,
                tr.gamma,
                reduce_mixture(
                    tr.mixture,
                    params.prune_threshold,
                    params.merge_threshold,
                    params.max_components,
                ),
            )
        )
    return LmbDensity(out)
