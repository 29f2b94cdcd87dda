"""Multi-target estimation error metrics.

ospa() is the standard cutoff metric between two point sets.  ospa2() scores
track *histories* over a trailing window: the base distance between an
estimated track and a true track is the time-averaged cutoff distance over
the window (charging the full cutoff whenever exactly one of the two exists),
and the same assignment-plus-cardinality form is applied on top.  A window of
one step reduces exactly to ospa().
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def ospa(x: np.ndarray, y: np.ndarray, cutoff: float = 100.0, order: float = 2.0) -> float:
    """OSPA distance between point sets x (m, d) and y (n, d).

    Both sets empty gives 0; exactly one empty gives the cutoff.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float)) if np.size(x) else np.zeros((0, 2))
    y = np.atleast_2d(np.asarray(y, dtype=float)) if np.size(y) else np.zeros((0, 2))
    m, n = x.shape[0], y.shape[0]
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return float(cutoff)
    d = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    dc = np.minimum(d, cutoff) ** order
    rows, cols = linear_sum_assignment(dc)
    cost = float(dc[rows, cols].sum())
    big = max(m, n)
    return float(((cost + cutoff**order * (big - min(m, n))) / big) ** (1.0 / order))


def ospa2(
    est_tracks: dict,
    true_tracks: dict,
    step: int,
    window: int = 10,
    cutoff: float = 100.0,
    order: float = 2.0,
) -> float:
    """Windowed track-history OSPA at `step`.

    Track arguments map a track id to {step: position}.  Only the trailing
    `window` steps ending at `step` are scored; tracks with no presence in
    the window are ignored.
    """
    steps = list(range(max(1, step - window + 1), step + 1))
    eids = [i for i, h in est_tracks.items() if any(t in h for t in steps)]
    tids = [i for i, h in true_tracks.items() if any(t in h for t in steps)]
    m, n = len(eids), len(tids)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return float(cutoff)
    base = np.zeros((m, n))
    for a, ei in enumerate(eids):
        eh = est_tracks[ei]
        for b, tj in enumerate(tids):
            th = true_tracks[tj]
            total, count = 0.0, 0
            for t in steps:
                pe, pt = eh.get(t), th.get(t)
                if pe is None and pt is None:
                    continue
                count += 1
                if pe is None or pt is None:
                    total += cutoff
                else:
                    total += min(float(np.linalg.norm(np.asarray(pe) - np.asarray(pt))), cutoff)
            base[a, b] = total / count if count else cutoff
    dc = base**order
    rows, cols = linear_sum_assignment(dc)
    cost = float(dc[rows, cols].sum())
    big = max(m, n)
    return float(((cost + cutoff**order * (big - min(m, n))) / big) ** (1.0 / order))
