"""Ranked assignment enumeration against brute force."""

import itertools

import numpy as np
import pytest

from plmb.assignment import ranked_assignments


def brute_force(cost, k):
    m, n = cost.shape
    out = []
    for cols in itertools.permutations(range(n), m):
        total = sum(cost[r, c] for r, c in enumerate(cols))
        if np.isfinite(total):
            out.append((list(cols), float(total)))
    out.sort(key=lambda t: t[1])
    return out[:k]


def test_matches_brute_force_on_random_matrices():
    rng = np.random.default_rng(21)
    for _ in range(40):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m, 7))
        cost = rng.uniform(0, 10, size=(m, n))
        cost[rng.random(size=(m, n)) < 0.2] = np.inf
        k = int(rng.integers(1, 12))
        got = ranked_assignments(cost, k)
        expected = brute_force(cost, k)
        assert len(got) == len(expected)
        for (cols_g, tot_g), (cols_e, tot_e) in zip(got, expected):
            assert tot_g == pytest.approx(tot_e, abs=1e-12)
        # costs nondecreasing and assignments distinct
        totals = [t for _, t in got]
        assert totals == sorted(totals)
        keys = {tuple(c) for c, _ in got}
        assert len(keys) == len(got)


def test_single_cell():
    got = ranked_assignments(np.array([[2.5]]), 3)
    assert len(got) == 1
    assert got[0][1] == 2.5
    assert list(got[0][0]) == [0]


def test_zero_rows_yields_empty_assignment():
    got = ranked_assignments(np.empty((0, 4)), 5)
    assert len(got) == 1
    assert got[0][0].size == 0
    assert got[0][1] == 0.0


def test_fully_forbidden_is_infeasible():
    assert ranked_assignments(np.full((2, 3), np.inf), 4) == []


def test_partial_gating_respected():
    cost = np.array([[1.0, np.inf], [np.inf, 2.0]])
    got = ranked_assignments(cost, 5)
    assert len(got) == 1
    assert list(got[0][0]) == [0, 1]
    assert got[0][1] == pytest.approx(3.0)


def test_rejects_more_rows_than_columns():
    with pytest.raises(ValueError):
        ranked_assignments(np.zeros((3, 2)), 1)
    with pytest.raises(ValueError):
        ranked_assignments(np.zeros((2, 2)), 0)


def test_enumerates_all_permutations_of_square_matrix():
    rng = np.random.default_rng(22)
    cost = rng.uniform(0, 1, size=(3, 3))
    got = ranked_assignments(cost, 100)
    assert len(got) == 6  # 3! distinct assignments, no duplicates
    expected = brute_force(cost, 6)
    for (cols_g, tot_g), (cols_e, tot_e) in zip(got, expected):
        assert list(cols_g) == cols_e
        assert tot_g == pytest.approx(tot_e)
