"""Fusing the posteriors of two sensors that watched the same scene.

Both sensors update the same predicted prior, then the two posteriors are
combined as a weighted geometric product per shared label.  With consensus
exponents (1/2, 1/2) fusing two identical posteriors changes nothing; when
the sensors disagree about where the target is, the agreement supremum
eta_f < 1 damps the fused existence possibility.
"""

import numpy as np

from plmb import (
    BernoulliTrack,
    FusionWeights,
    Label,
    LmbDensity,
    MaxMixture,
    fuse_lmb_shared_labels,
    fuse_tracks,
)


def track(mean, var=50.0, gamma=1.0, tau=1.0):
    mix = MaxMixture.single(np.asarray(mean, float), var * np.eye(2))
    return BernoulliTrack(Label(0, 0), tau, gamma, mix)


# Perfect agreement: consensus fusion is the identity.
a = track([120.0, -40.0], tau=0.2)
same = fuse_tracks(a, a, 0.5, 0.5)
print("identical posteriors:", f"tau {same.tau:.3f} gamma {same.gamma:.3f}",
      "mean", same.mixture.means[0])

# Growing disagreement between two uncommitted tracks (tau = gamma = 1):
# the fused existence drops as eta_f = exp(-d^2 / (2 * 4 var)).
print("\noffset   fused tau   fused gamma   fused mean x")
for d in (0.0, 5.0, 15.0, 40.0):
    u, v = track([120.0, -40.0]), track([120.0 + d, -40.0])
    fused = fuse_tracks(u, v, 0.5, 0.5)
    print(f"{d:6.1f}   {fused.tau:9.3f}   {fused.gamma:11.6f}   "
          f"{fused.mixture.means[0][0]:10.2f}")

# Density-level fusion walks the shared labels; a track that only one node
# carries is padded with a vague, low-existence stand-in before fusing, so
# single-node opinions survive but arrive damped.
only_a = BernoulliTrack(
    Label(3, 1), 0.2, 1.0, MaxMixture.single(np.array([-300.0, 80.0]), 50.0 * np.eye(2))
)
da = LmbDensity([a, only_a])
db = LmbDensity([track([123.0, -40.0], tau=0.2)])
fused = fuse_lmb_shared_labels([da, db], FusionWeights.consensus(2))
print("\nfused density:")
for tr in fused:
    print(f"  label {tuple(tr.label)}  tau {tr.tau:.3f}  gamma {tr.gamma:.4f}  "
          f"mean {np.round(tr.mixture.dominant_mean(), 1)}")
