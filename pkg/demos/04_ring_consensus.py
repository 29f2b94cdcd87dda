"""Metropolis weights and consensus on a ring of sensors.

Each node averages with its graph neighbors using weights

    W[i][j] = 1 / (1 + max(N_i, N_j))   for an edge (i, j),

self weight = whatever keeps the row summing to one.  The matrix is
symmetric and doubly stochastic, so repeated application drives any vector
of node opinions toward the common mean without a coordinator.  The tracking
code uses the same weights as fusion exponents on neighbor densities.
"""

import numpy as np

from plmb import metropolis_weights, ring_graph
from plmb.network import SensorGraph

g = ring_graph(6)
W = metropolis_weights(g)
print("ring of 6, Metropolis weights:")
print(np.round(W, 3))
print("row sums:", np.round(W.sum(axis=1), 12))
print("column sums:", np.round(W.sum(axis=0), 12))

# Scalar consensus: opinions contract toward the average at every sweep.
y = np.array([0.0, 10.0, -4.0, 2.0, 7.0, -9.0])
print("\nsweep  opinions (spread)")
for it in range(6):
    print(f"{it:4d}   {np.round(y, 2)}  ({np.ptp(y):.3f})")
    y = W @ y
print(f"mean stays {y.mean():.6f} throughout (started at 1.0)")

# A star graph weights the hub edge by its busiest endpoint.
star = SensorGraph(4, frozenset({(0, 1), (0, 2), (0, 3)}))
print("\n4-node star weights:")
print(np.round(metropolis_weights(star), 3))
