"""Gaussian max-mixture algebra.

A max-mixture is max_i w_i * exp(-0.5 (x-m_i)' P_i^{-1} (x-m_i)) — the same
components as a Gaussian sum, but combined with max instead of +.  The payoff
is that products, powers and suprema stay in the family and are computed
exactly: the supremum of a normalized mixture is just its largest weight, and
the product of two components is another (scaled) component.
"""

import numpy as np

from plmb import MaxMixture, mixture_power, normalize, supremum, weighted_product

a = MaxMixture(
    weights=np.array([1.0, 0.5]),
    means=np.array([[0.0], [4.0]]),
    covs=np.array([[[4.0]], [[1.0]]]),
)
b = MaxMixture(
    weights=np.array([1.0]),
    means=np.array([[3.0]]),
    covs=np.array([[[2.0]]]),
)

xs = np.linspace(-4, 8, 7).reshape(-1, 1)
print("a(x) on a coarse grid:", np.round(a(xs), 4))
print("sup a =", supremum(a), "(equals the top weight, no search needed)")

# Product: every pair of components multiplies into a new component whose
# mean is the precision-weighted average.  sup(ab) < 1 measures disagreement.
ab = weighted_product(a, 1.0, b, 1.0)
print("\nproduct has", len(ab.weights), "components, sup =", round(supremum(ab), 6))
print("normalized product sup =", supremum(normalize(ab)))

# Powers reweight and widen/narrow components: [w N(m, P)]^0.5 = w^0.5 N(m, 2P).
half = mixture_power(a, 0.5)
print("\nhalf power: weights", np.round(half.weights, 4), "covs", half.covs.ravel())

# The grid never beats the exact supremum.
fine = np.linspace(-10, 12, 200_001).reshape(-1, 1)
grid_sup = float(np.max(ab(fine)))
print("\nexact sup(ab) =", supremum(ab))
print("grid  sup(ab) =", grid_sup, "(lower, as it must be)")
