"""Multi-sensor stepping: centralized fusion and distributed consensus.

A sensor graph lists undirected communication edges; every node implicitly
hears itself.  Metropolis weights over the graph are symmetric and doubly
stochastic, so repeated neighbourhood fusion converges toward the network-wide
consensus density.

The centralized step predicts once, lets every sensor update that same prior
independently, and fuses the local posteriors at the centre (fused state is
fed back as the next prior).  The distributed step discounts each node's
prediction, updates locally, and then runs a fixed number of consensus
iterations in which every node fuses its neighbourhood with match_and_fuse
(label spaces differ across nodes).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TopologyError
from .filtering import (
    FilterParams,
    LmbDensity,
    MotionModel,
    SensorModel,
    drop_weak_tracks,
    predict,
    update_detailed,
)
from .fusion import (
    FusionWeights,
    MissedDetectionModel,
    fuse_lmb_shared_labels,
    match_and_fuse,
    merge_duplicate_tracks,
)


@dataclass(frozen=True)
class SensorGraph:
    """Undirected communication graph on nodes 0..size-1."""

    size: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.size < 1:
            raise TopologyError("a sensor graph needs at least one node")
        norm = set()
        for i, j in self.edges:
            if i == j:
                raise TopologyError(f"self-loop on node {i} (self-links are implicit)")
            if not (0 <= i < self.size and 0 <= j < self.size):
                raise TopologyError(f"edge ({i}, {j}) leaves the node range 0..{self.size - 1}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        if not self._connected():
            raise TopologyError("sensor graph is not connected")

    def _connected(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return len(seen) == self.size

    def neighbors(self, i: int) -> list[int]:
        """Nodes node i hears from, itself included."""
        out = {i}
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return sorted(out)


def complete_graph(n: int) -> SensorGraph:
    return SensorGraph(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))


def ring_graph(n: int) -> SensorGraph:
    if n == 1:
        return SensorGraph(1, frozenset())
    if n == 2:
        return SensorGraph(2, frozenset({(0, 1)}))
    return SensorGraph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def metropolis_weights(g: SensorGraph) -> np.ndarray:
    """Symmetric doubly-stochastic consensus weights.

    For an edge (i, j): W_ij = 1 / (1 + max(N_i, N_j)) with N_i the
    neighbourhood size of node i including itself; diagonal entries absorb
    the remainder of each row.
    """
    n = g.size
    sizes = [len(g.neighbors(i)) for i in range(n)]
    W = np.zeros((n, n))
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(sizes[i], sizes[j]))
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


def save_topology(g: SensorGraph, path) -> None:
    """Write a topology file: node-count header, then one 'i j' line per edge."""
    lines = [str(g.size)] + [f"{i} {j}" for i, j in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_topology(path) -> SensorGraph:
    """Parse the node-count header plus 'i j' edge lines format."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise TopologyError(f"topology file {path} is empty")
    try:
        size = int(lines[0])
    except ValueError as exc:
        raise TopologyError(f"bad node-count header {lines[0]!r}") from exc
    edges = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise TopologyError(f"bad edge line {ln!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise TopologyError(f"bad edge line {ln!r}") from exc
        edges.add((i, j))
    return SensorGraph(size, frozenset(edges))


def centralized_step(
    prior: LmbDensity,
    scans: list[np.ndarray],
    sensors: list[SensorModel],
    motion: MotionModel,
    birth: LmbDensity | None,
    params: FilterParams = FilterParams(),
    mode: str = "independent",
) -> tuple[LmbDensity, list[np.ndarray]]:
    """One centralized multi-sensor step; returns (posterior, per-sensor usage).

    The same predicted prior is updated against every sensor's scan and the
    local posteriors are fused over the shared label space.  Mode
    "independent" applies the product rule with unit exponents; "consensus"
    uses equal exponents 1/N, which avoids re-counting the shared prior.
    """
    if len(scans) != len(sensors):
        raise TopologyError(f"{len(scans)} scans for {len(sensors)} sensors")
    predicted = predict(prior, motion, birth)
    results = [update_detailed(predicted, z, s, params) for z, s in zip(scans, sensors)]
    n = len(sensors)
    weights = FusionWeights.independent(n) if mode == "independent" else FusionWeights.consensus(n)
    fused = fuse_lmb_shared_labels([r.density for r in results], weights, params)
    fused = drop_weak_tracks(fused, params.track_floor)
    return fused, [r.usage for r in results]


def distributed_step(
    states: list[LmbDensity],
    scans: list[np.ndarray],
    sensors: list[SensorModel],
    motion: MotionModel,
    births: list[LmbDensity | None],
    graph: SensorGraph,
    step: int,
    params: FilterParams = FilterParams(),
    consensus_iterations: int = 3,
    discount: float | None = None,
) -> tuple[list[LmbDensity], list[np.ndarray]]:
    """One distributed step; returns (per-node posteriors, per-node usage).

    Each node predicts with a discount (default 1/|V_i|), updates against its
    own scan, and then repeatedly replaces its density with the Metropolis
    fusion of its neighbourhood.  Node label spaces are unrelated, so every
    neighbourhood fold goes through track matching and fresh labels are issued
    at the receiving node.
    """
    n = graph.size
    if not (len(states) == len(scans) == len(sensors) == len(births) == n):
        raise TopologyError("states, scans, sensors and births must all match the graph size")
    W = metropolis_weights(graph)

    locals_ = []
    for i in range(n):
        w_i = discount if discount is not None else 1.0 / len(graph.neighbors(i))
        predicted = predict(states[i], motion, births[i], discount=w_i)
        locals_.append(update_detailed(predicted, scans[i], sensors[i], params))
    dens = [r.density for r in locals_]
    usage = [r.usage for r in locals_]

    for _ in range(max(0, consensus_iterations)):
        swept = []
        for i in range(n):
            nbrs = graph.neighbors(i)
            own_miss = MissedDetectionModel(sensor=sensors[i])
            acc = dens[nbrs[0]]
            acc_w = W[i, nbrs[0]]
            for j in nbrs[1:]:
                acc = match_and_fuse(
                    acc,
                    dens[j],
                    acc_w,
                    W[i, j],
                    missed=MissedDetectionModel(sensor=sensors[j]),
                    matching_threshold=params.matching_threshold,
                    label_time=step,
                    params=params,
                    missed_b=own_miss,
                )
                acc_w = 1.0
            # An association conflict during a fold can leave two coincident
            # copies of one object in the union; resolve them here so they do
            # not split the object's detections between them forever after.
            acc = merge_duplicate_tracks(acc, params.duplicate_threshold)
            swept.append(drop_weak_tracks(acc, params.track_floor))
        dens = swept
    return dens, usage
