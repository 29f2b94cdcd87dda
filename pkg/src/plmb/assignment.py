"""Ranked linear assignments (Murty's partition method).

Cost matrices are rectangular with rows <= columns; every row must take a
distinct column.  Forbidden pairings are +inf.  The K best assignments come
out in nondecreasing total cost by repeatedly solving partitioned copies of
the matrix with scipy's Jonker-Volgenant solver.
"""

from __future__ import annotations

import heapq

import numpy as np
from scipy.optimize import linear_sum_assignment


def _solve(cost: np.ndarray):
    """Best assignment of a matrix, or None when infeasible."""
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        return None
    total = float(cost[rows, cols].sum())
    if not np.isfinite(total):
        return None
    out = np.empty(cost.shape[0], dtype=int)
    out[rows] = cols
    return out, total


def ranked_assignments(cost: np.ndarray, k: int) -> list[tuple[np.ndarray, float]]:
    """Up to k cheapest row-to-column assignments, cheapest first.

    Returns a list of (columns, total_cost) where columns[r] is the column
    assigned to row r.  A matrix with zero rows yields the single empty
    assignment; a matrix with no finite assignment yields an empty list.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost must be a matrix, got shape {cost.shape}")
    m, n = cost.shape
    if k < 1:
        raise ValueError("k must be at least 1")
    if m == 0:
        return [(np.empty(0, dtype=int), 0.0)]
    if m > n:
        raise ValueError(f"more rows than columns ({m} > {n}); pad with miss columns")

    best = _solve(cost)
    if best is None:
        return []
    results: list[tuple[np.ndarray, float]] = []
    seen = {tuple(best[0])}
    counter = 0
    heap = [(best[1], counter, best[0], cost)]
    while heap and len(results) < k:
        total, _, cols, mat = heapq.heappop(heap)
        results.append((cols, total))
        # Partition the remaining solution space of this node: child i keeps
        # pairs 0..i-1 of the popped solution fixed and forbids pair i.
        for i in range(m):
            child = mat.copy()
            child[i, cols[i]] = np.inf
            for r in range(i):
                c = cols[r]
                keep = mat[r, c]
                child[r, :] = np.inf
                child[:, c] = np.inf
                child[r, c] = keep
            sol = _solve(child)
            if sol is None:
                continue
            key = tuple(sol[0])
            if key in seen:
                continue
            seen.add(key)
            counter += 1
            heapq.heappush(heap, (sol[1], counter, sol[0], child))
    return results
