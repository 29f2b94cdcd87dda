"""Gaussian max-mixture possibility functions.

A possibility function here is an upper bound on a credibility of events,
normalised so that its supremum over the state space equals one.  The Gaussian
possibility has no normalising constant:

    N(x; m, P) = exp(-0.5 (x - m)' P^-1 (x - m))

and a max-mixture combines weighted Gaussian possibilities with a pointwise
maximum instead of a sum,

    f(x) = max_i  w_i N(x; m_i, P_i),      0 < w_i <= 1.

The supremum of a max-mixture is exactly its largest weight, which keeps
normalisation and pruning decisions exact (no integrals involved).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMixtureError, InvalidModelError

# Smallest Cholesky pivot accepted when validating a covariance.
MIN_PIVOT = 1e-12

# Default mixture-reduction parameters.
PRUNE_THRESHOLD = 1e-3
MERGE_THRESHOLD = 0.1
MAX_COMPONENTS = 30


def symmetrize(cov: np.ndarray) -> np.ndarray:
    """Return the symmetric part (P + P') / 2 of a covariance stack."""
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def validate_cov(cov: np.ndarray) -> np.ndarray:
    """Symmetrise and check positive definiteness of a single covariance.

    Raises InvalidModelError if the matrix is not square or any Cholesky
    pivot falls below MIN_PIVOT.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidModelError(f"covariance must be square, got shape {cov.shape}")
    cov = symmetrize(cov)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise InvalidModelError(f"covariance is not positive definite: {exc}") from exc
    if np.min(np.diag(chol)) ** 2 < MIN_PIVOT:
        raise InvalidModelError("covariance is numerically singular")
    return cov


def validate_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrise and check positive *semi*-definiteness (e.g. process noise)."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidModelError(f"covariance must be square, got shape {cov.shape}")
    cov = symmetrize(cov)
    eigs = np.linalg.eigvalsh(cov)
    if eigs.size and eigs[0] < -1e-9 * max(1.0, eigs[-1]):
        raise InvalidModelError("covariance has a negative eigenvalue")
    return cov


def gaussian_possibility(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Evaluate N(x; mean, cov) at one point or a stack of points.

    `x` may be shape (d,) or (n, d); returns a scalar or shape (n,) array.
    The value is 1 exactly when x equals the mean.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    diff = x - np.asarray(mean, dtype=float)
    if diff.shape[1] != np.shape(cov)[0]:
        raise InvalidModelError(
            f"point dimension {diff.shape[1]} does not match covariance {np.shape(cov)}"
        )
    sol = np.linalg.solve(validate_cov(cov), diff.T).T
    q = np.einsum("ij,ij->i", diff, sol)
    out = np.exp(-0.5 * q)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian possibility component."""

    weight: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.weight <= 1.0 + 1e-9):
            raise InvalidModelError(f"component weight must lie in (0, 1], got {self.weight}")
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = validate_cov(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise InvalidModelError(
                f"mean dimension {mean.shape[0]} does not match covariance {cov.shape}"
            )
        object.__setattr__(self, "weight", float(min(self.weight, 1.0)))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.weight * gaussian_possibility(x, self.mean, self.cov)


class MaxMixture:
    """A Gaussian max-mixture backed by stacked arrays.

    Attributes
    ----------
    weights : (n,) array, each in (0, 1]
    means   : (n, d) array
    covs    : (n, d, d) array
    """

    __slots__ = ("weights", "means", "covs")

    def __init__(self, weights, means, covs, validate: bool = True):
        weights = np.asarray(weights, dtype=float).reshape(-1)
        means = np.atleast_2d(np.asarray(means, dtype=float))
        covs = np.asarray(covs, dtype=float)
        if covs.ndim == 2:
            covs = covs[None, :, :]
        if weights.size == 0:
            raise EmptyMixtureError("a max-mixture needs at least one component")
        if means.shape[0] != weights.size or covs.shape[0] != weights.size:
            raise InvalidModelError("weights, means and covariances disagree in length")
        if covs.shape[1] != covs.shape[2] or covs.shape[1] != means.shape[1]:
            raise InvalidModelError("component dimensions disagree")
        if validate:
            if np.any(weights <= 0.0) or np.any(weights > 1.0 + 1e-9):
                raise InvalidModelError("mixture weights must lie in (0, 1]")
            weights = np.minimum(weights, 1.0)
            covs = symmetrize(covs)
            for cov in covs:
                validate_cov(cov)
        self.weights = weights
        self.means = means
        self.covs = covs

    @classmethod
    def from_components(cls, components) -> "MaxMixture":
        comps = list(components)
        if not comps:
            raise EmptyMixtureError("a max-mixture needs at least one component")
        return cls(
            [c.weight for c in comps],
            np.stack([c.mean for c in comps]),
            np.stack([c.cov for c in comps]),
        )

    @classmethod
    def single(cls, mean, cov, weight: float = 1.0) -> "MaxMixture":
        return cls([weight], np.asarray(mean, dtype=float)[None, :], validate_cov(cov)[None, :, :])

    @property
    def size(self) -> int:
        return self.weights.size

    def __len__(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def components(self):
        return [
            GaussianComponent(w, m, c) for w, m, c in zip(self.weights, self.means, self.covs)
        ]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Pointwise evaluation max_i w_i N(x; m_i, P_i) at (d,) or (n, d) points."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        diff = x[:, None, :] - self.means[None, :, :]  # (n, k, d)
        sol = np.linalg.solve(self.covs[None, :, :, :], diff[..., None])[..., 0]
        q = np.einsum("nkd,nkd->nk", diff, sol)
        vals = np.max(self.weights[None, :] * np.exp(-0.5 * q), axis=1)
        return float(vals[0]) if single else vals

    def dominant_mean(self) -> np.ndarray:
        """Mean of the highest-weight component (first one on ties)."""
        return self.means[int(np.argmax(self.weights))]

    def scaled(self, factor: float) -> "MaxMixture":
        return MaxMixture(self.weights * factor, self.means, self.covs, validate=False)


def supremum(mix: MaxMixture) -> float:
    """sup_x f(x); for a max-mixture this is exactly the largest weight."""
    return float(np.max(mix.weights))


def normalize(mix: MaxMixture) -> MaxMixture:
    """Rescale weights so the mixture supremum equals one."""
    return mix.scaled(1.0 / supremum(mix))


def mixture_power(mix: MaxMixture, omega: float) -> MaxMixture:
    """Raise a max-mixture to a positive power: f^w.

    Componentwise this is exact: (w N(x; m, P))^omega = w^omega N(x; m, P/omega).
    """
    if omega <= 0.0:
        raise InvalidModelError(f"mixture power must be positive, got {omega}")
    return MaxMixture(mix.weights**omega, mix.means, mix.covs / omega, validate=False)


def _pairwise_product(wa, ma, Pa, wb, mb, Pb):
    """All pairwise products of two weighted Gaussian stacks.

    Returns flat stacks (na*nb,) / (na*nb, d) / (na*nb, d, d) with
    w_ij = wa_i wb_j N(ma_i; mb_j, Pa_i + Pb_j) and moments given by the
    information-form combination of the two components.
    """
    na, nb = wa.size, wb.size
    Psum = Pa[:, None, :, :] + Pb[None, :, :, :]  # (na, nb, d, d)
    diff = ma[:, None, :] - mb[None, :, :]  # (na, nb, d)
    sol = np.linalg.solve(Psum, diff[..., None])[..., 0]
    q = np.einsum("abd,abd->ab", diff, sol)
    w = (wa[:, None] * wb[None, :]) * np.exp(-0.5 * q)

    Ia = np.linalg.inv(Pa)  # (na, d, d)
    Ib = np.linalg.inv(Pb)
    Isum = Ia[:, None, :, :] + Ib[None, :, :, :]
    P = np.linalg.inv(Isum)
    P = symmetrize(P)
    lhs = np.einsum("aij,aj->ai", Ia, ma)[:, None, :] + np.einsum("bij,bj->bi", Ib, mb)[None, :, :]
    m = np.einsum("abij,abj->abi", P, lhs)

    d = ma.shape[1]
    return w.reshape(-1), m.reshape(na * nb, d), P.reshape(na * nb, d, d)


def mixture_product(a: MaxMixture, b: MaxMixture) -> MaxMixture:
    """Pointwise product of two max-mixtures, one component per input pair.

    The result is generally unnormalised; weights can drop far below one, so
    callers usually follow with normalize() and reduce_mixture().
    """
    if a.dim != b.dim:
        raise InvalidModelError(f"mixture dimensions disagree: {a.dim} vs {b.dim}")
    w, m, P = _pairwise_product(a.weights, a.means, a.covs, b.weights, b.means, b.covs)
    keep = w > 0.0
    if not np.any(keep):
        # All cross terms underflowed; keep the least-bad pair so the result
        # stays a valid mixture (callers treat its supremum as ~0).
        keep = np.zeros_like(w, dtype=bool)
        keep[int(np.argmax(w))] = True
        w = np.maximum(w, 1e-300)
    return MaxMixture(w[keep], m[keep], P[keep], validate=False)


def weighted_product(a: MaxMixture, wa: float, b: MaxMixture, wb: float) -> MaxMixture:
    """Unnormalised f_a^wa * f_b^wb as a single max-mixture."""
    return mixture_product(mixture_power(a, wa), mixture_power(b, wb))


def hellinger_distance(m1, P1, m2, P2) -> float:
    """Hellinger distance between two Gaussian shapes (weights play no role)."""
    return float(
        _hellinger_batch(
            np.asarray(m1, float)[None, :],
            np.asarray(P1, float)[None, :, :],
            np.asarray(m2, float)[None, :],
            np.asarray(P2, float)[None, :, :],
        )[0]
    )


def _hellinger_batch(m1, P1, m2, P2) -> np.ndarray:
    """Vectorised Hellinger distance between paired Gaussian stacks."""
    Pm = 0.5 * (P1 + P2)
    diff = m1 - m2
    sol = np.linalg.solve(Pm, diff[..., None])[..., 0]
    q = np.einsum("nd,nd->n", diff, sol)
    det1 = np.linalg.det(P1)
    det2 = np.linalg.det(P2)
    detm = np.linalg.det(Pm)
    bc = (det1**0.25) * (det2**0.25) / np.sqrt(detm) * np.exp(-0.125 * q)
    return np.sqrt(np.maximum(1.0 - bc, 0.0))


def prune(mix: MaxMixture, threshold: float = PRUNE_THRESHOLD) -> MaxMixture:
    """Drop components with weight below `threshold`, never the best one."""
    keep = mix.weights >= threshold
    if not np.any(keep):
        keep[int(np.argmax(mix.weights))] = True
    return MaxMixture(mix.weights[keep], mix.means[keep], mix.covs[keep], validate=False)


def merge(mix: MaxMixture, threshold: float = MERGE_THRESHOLD) -> MaxMixture:
    """Greedily merge components closer than `threshold` in Hellinger distance.

    The highest-weight remaining component is the pivot of each group.  The
    merged component keeps the pivot group's maximum weight and takes the
    weighted (moment-matched) mean and covariance of the group.
    """
    if mix.size == 1 or threshold <= 0.0:
        return mix
    w, m, P = mix.weights, mix.means, mix.covs
    alive = np.ones(mix.size, dtype=bool)
    out_w, out_m, out_P = [], [], []
    while np.any(alive):
        idx = np.flatnonzero(alive)
        pivot = idx[int(np.argmax(w[idx]))]
        dists = _hellinger_batch(
            np.broadcast_to(m[pivot], m[idx].shape),
            np.broadcast_to(P[pivot], P[idx].shape),
            m[idx],
            P[idx],
        )
        group = idx[dists < threshold]
        if group.size == 0:
            group = np.array([pivot])
        gw = w[group]
        total = np.sum(gw)
        gm = np.einsum("g,gd->d", gw, m[group]) / total
        spread = m[group] - gm
        gP = (
            np.einsum("g,gij->ij", gw, P[group])
            + np.einsum("g,gi,gj->ij", gw, spread, spread)
        ) / total
        out_w.append(np.max(gw))
        out_m.append(gm)
        out_P.append(symmetrize(gP))
        alive[group] = False
    return MaxMixture(np.array(out_w), np.stack(out_m), np.stack(out_P), validate=False)


def cap(mix: MaxMixture, max_components: int = MAX_COMPONENTS) -> MaxMixture:
    """Keep only the `max_components` highest-weight components."""
    if mix.size <= max_components:
        return mix
    order = np.argsort(-mix.weights, kind="stable")[:max_components]
    order = np.sort(order)  # preserve original ordering among the survivors
    return MaxMixture(mix.weights[order], mix.means[order], mix.covs[order], validate=False)


def reduce_mixture(
    mix: MaxMixture,
    prune_threshold: float = PRUNE_THRESHOLD,
    merge_threshold: float = MERGE_THRESHOLD,
    max_components: int = MAX_COMPONENTS,
) -> MaxMixture:
    """Prune, merge, cap and renormalise a mixture in that order."""
    out = prune(mix, prune_threshold)
    out = merge(out, merge_threshold)
    out = cap(out, max_components)
    return normalize(out)
