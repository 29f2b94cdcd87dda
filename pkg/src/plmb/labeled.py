"""Labeled multi-target possibility densities.

Two representations are used throughout:

* LmbDensity - a labeled multi-Bernoulli density: one independent track per
  label, each carrying a non-existence possibility tau, an existence
  possibility gamma (max(tau, gamma) = 1) and a normalised spatial
  max-mixture.

* DeltaGlmb - a delta-generalised labeled multi-Bernoulli density: a set of
  weighted hypotheses, each fixing a label set and a measurement association,
  with per-label spatial mixtures.  Hypothesis weights are possibilities as
  well, so the best hypothesis has weight one.

Converting an LMB into hypothesis form enumerates label subsets in descending
weight order; collapsing hypothesis form back to an LMB takes per-label maxima
over hypotheses, which preserves the presence possibility of every single
target pointwise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DuplicateLabelError, InvalidModelError
from .maxmix import MaxMixture, normalize

# Floor used when a per-label maximum runs over an empty hypothesis set.
POSSIBILITY_FLOOR = 1e-9


class Label(NamedTuple):
    """Track label: birth time plus a disambiguating index, ordered lexicographically."""

    birth_time: int
    index: int


@dataclass(frozen=True)
class BernoulliTrack:
    """One labeled track.

    tau is the possibility that the track does not exist, gamma the
    possibility that it does.  At least one of the two must equal one;
    both can (total ignorance).
    """

    label: Label
    tau: float
    gamma: float
    mixture: MaxMixture

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0 + 1e-9) or not (0.0 < self.gamma <= 1.0 + 1e-9):
            raise InvalidModelError(
                f"track possibilities must lie in (0, 1], got tau={self.tau} gamma={self.gamma}"
            )
        if max(self.tau, self.gamma) < 1.0 - 1e-9:
            raise InvalidModelError(
                f"max(tau, gamma) must equal one, got tau={self.tau} gamma={self.gamma}"
            )
        object.__setattr__(self, "tau", float(min(self.tau, 1.0)))
        object.__setattr__(self, "gamma", float(min(self.gamma, 1.0)))


class LmbDensity:
    """Mapping from labels to independent Bernoulli tracks, kept label-sorted."""

    __slots__ = ("tracks",)

    def __init__(self, tracks: Iterable[BernoulliTrack] = ()):
        self.tracks: dict[Label, BernoulliTrack] = {}
        for tr in tracks:
            if tr.label in self.tracks:
                raise DuplicateLabelError(f"duplicate label {tr.label}")
            self.tracks[tr.label] = tr
        self.tracks = dict(sorted(self.tracks.items()))

    @property
    def labels(self) -> list[Label]:
        return list(self.tracks)

    def __len__(self) -> int:
        return len(self.tracks)

    def __iter__(self):
        return iter(self.tracks.values())

    def __getitem__(self, label: Label) -> BernoulliTrack:
        return self.tracks[label]

    def union(self, other: "LmbDensity") -> "LmbDensity":
        """Disjoint union of two LMB densities (labels must not collide)."""
        overlap = set(self.tracks) & set(other.tracks)
        if overlap:
            raise DuplicateLabelError(f"labels present on both sides: {sorted(overlap)}")
        return LmbDensity(list(self) + list(other))

    def presence_possibility(self, x: np.ndarray) -> np.ndarray:
        """Pointwise possibility that some target occupies state x."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if not self.tracks:
            vals = np.zeros(pts.shape[0])
        else:
            vals = np.max(
                np.stack([tr.gamma * np.atleast_1d(tr.mixture(pts)) for tr in self]), axis=0
            )
        return float(vals[0]) if single else vals


@dataclass(frozen=True)
class GlmbHypothesis:
    """One association hypothesis of a delta-GLMB density.

    assoc maps each label in the hypothesis to a measurement index (1-based)
    or 0 for a missed detection; nonzero values must be distinct.
    """

    labels: tuple[Label, ...]
    assoc: Mapping[Label, int]
    weight: float
    mixtures: Mapping[Label, MaxMixture]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise DuplicateLabelError(f"hypothesis repeats a label: {self.labels}")
        used = [j for j in self.assoc.values() if j != 0]
        if len(set(used)) != len(used):
            raise InvalidModelError(f"association reuses a measurement: {dict(self.assoc)}")
        if set(self.assoc) != set(self.labels) or set(self.mixtures) != set(self.labels):
            raise InvalidModelError("assoc/mixture keys must match the hypothesis labels")


class DeltaGlmb:
    """Weighted hypothesis mixture over label sets and associations."""

    __slots__ = ("hypotheses",)

    def __init__(self, hypotheses: Sequence[GlmbHypothesis]):
        if not hypotheses:
            raise InvalidModelError("a delta-GLMB needs at least one hypothesis")
        top = max(h.weight for h in hypotheses)
        if abs(top - 1.0) > 1e-12:
            raise InvalidModelError(f"best hypothesis weight must be one, got {top}")
        self.hypotheses = list(hypotheses)

    @property
    def label_domain(self) -> list[Label]:
        out = set()
        for h in self.hypotheses:
            out.update(h.labels)
        return sorted(out)

    def presence_possibility(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        best = np.zeros(pts.shape[0])
        for h in self.hypotheses:
            for lab in h.labels:
                np.maximum(best, h.weight * np.atleast_1d(h.mixtures[lab](pts)), out=best)
        return float(best[0]) if single else best


def cardinality_possibility(g: DeltaGlmb, n: int) -> float:
    """Possibility that exactly n targets exist: best weight among size-n hypotheses."""
    best = 0.0
    for h in g.hypotheses:
        if len(h.labels) == n:
            best = max(best, h.weight)
    return best


def _subset_weights(d: LmbDensity):
    """Sorted flip costs for enumerating label subsets in descending weight.

    The best subset includes a label iff gamma > tau; flipping one label costs
    |ln gamma - ln tau| in the log domain.  Returns (labels, include_base,
    penalties sorted ascending with their label positions, base log-weight).
    """
    labels = d.labels
    include = [d[lab].gamma > d[lab].tau for lab in labels]
    base_logw = sum(math.log(max(d[lab].tau, d[lab].gamma)) for lab in labels)
    pens = sorted(
        (abs(math.log(d[lab].gamma) - math.log(d[lab].tau)), i) for i, lab in enumerate(labels)
    )
    return labels, include, pens, base_logw


def lmb_to_delta_glmb(d: LmbDensity, max_hypotheses: int) -> DeltaGlmb:
    """Expand an LMB into its `max_hypotheses` best label-subset hypotheses.

    Hypothesis weights are products of per-label gamma (included) or tau
    (excluded), renormalised so the best subset has weight one.  All
    associations are 0 (no measurements involved at this stage).
    """
    if max_hypotheses < 1:
        raise InvalidModelError("max_hypotheses must be at least 1")
    hyps = []
    for logw, included in k_best_subsets(d, max_hypotheses):
        labs = tuple(lab for lab, inc in zip(d.labels, included) if inc)
        hyps.append(
            GlmbHypothesis(
                labels=labs,
                assoc={lab: 0 for lab in labs},
                weight=math.exp(logw),
                mixtures={lab: d[lab].mixture for lab in labs},
            )
        )
    return DeltaGlmb(hyps)


def k_best_subsets(d: LmbDensity, k: int):
    """Yield up to k (log_weight, include_mask) pairs in descending weight.

    Log-weights are normalised so the best subset scores zero.  Enumeration is
    exact: it walks flip sets of the per-label include/exclude choices in
    nondecreasing total flip cost using a heap.
    """
    labels, include, pens, _base = _subset_weights(d)
    m = len(labels)
    if m == 0:
        yield 0.0, []
        return
    count = 0
    # Heap entries: (cost, flip positions into the sorted penalty list).
    heap = [(0.0, ())]
    while heap and count < k:
        cost, flips = heapq.heappop(heap)
        mask = list(include)
        for f in flips:
            pos = pens[f][1]
            mask[pos] = not mask[pos]
        yield -cost, mask
        count += 1
        last = flips[-1] if flips else -1
        if last + 1 < m:
            heapq.heappush(heap, (cost + pens[last + 1][0], flips + (last + 1,)))
            if flips:
                heapq.heappush(
                    heap, (cost - pens[last][0] + pens[last + 1][0], flips[:-1] + (last + 1,))
                )


def delta_glmb_to_lmb(
    g: DeltaGlmb,
    fallback: Mapping[Label, MaxMixture] | None = None,
    floor: float = POSSIBILITY_FLOOR,
) -> LmbDensity:
    """Collapse hypothesis form to an LMB by per-label maxima.

    For every label: tau is the best weight among hypotheses excluding it,
    gamma the best among those including it, and the spatial mixture is the
    weight-scaled max over including hypotheses (renormalised).  Empty maxima
    fall back to `floor`; a label that no hypothesis includes keeps its
    `fallback` mixture if one is supplied, otherwise it is dropped.
    """
    labels = g.label_domain
    tracks = []
    for lab in labels:
        tau = floor
        gamma = floor
        # Hypotheses sharing a mixture object for this label differ only in
        # scale, so one representative per object suffices for the max.
        contrib: dict[int, tuple[float, MaxMixture]] = {}
        for h in g.hypotheses:
            if lab in h.assoc:
                gamma = max(gamma, h.weight)
                mix = h.mixtures[lab]
                key = id(mix)
                if key not in contrib or contrib[key][0] < h.weight:
                    contrib[key] = (h.weight, mix)
            else:
                tau = max(tau, h.weight)
        if not contrib:
            if fallback is None or lab not in fallback:
                continue
            mixture = fallback[lab]
            gamma = floor
        else:
            ws, ms, Ps = [], [], []
            for scale, mix in contrib.values():
                ws.append(mix.weights * (scale / gamma))
                ms.append(mix.means)
                Ps.append(mix.covs)
            mixture = normalize(
                MaxMixture(
                    np.concatenate(ws), np.vstack(ms), np.concatenate(Ps), validate=False
                )
            )
        norm = max(tau, gamma)
        tracks.append(BernoulliTrack(lab, tau / norm, gamma / norm, mixture))
    return LmbDensity(tracks)


def map_estimate(d: LmbDensity) -> list[tuple[Label, np.ndarray]]:
    """Most-possible multi-target estimate of an LMB density.

    The cardinality possibility of the hypothesis expansion is maximised
    exactly: the best size-n subset takes the n largest gamma/tau ratios, so
    no explicit enumeration is needed.  Ties in cardinality go to the smaller
    count.  Each reported state is the dominant component mean of its track.
    """
    if not len(d):
        return []
    ratios = sorted(
        ((math.log(tr.gamma) - math.log(tr.tau), tr.label) for tr in d),
        key=lambda t: (-t[0], t[1]),
    )
    log_tau_total = sum(math.log(tr.tau) for tr in d)
    best_n, best_logw, acc = 0, log_tau_total, log_tau_total
    for n, (lr, _lab) in enumerate(ratios, start=1):
        acc += lr
        if acc > best_logw + 1e-15:
            best_n, best_logw = n, acc
    chosen = sorted(lab for _lr, lab in ratios[:best_n])
    return [(lab, d[lab].mixture.dominant_mean()) for lab in chosen]
