from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_setting
from mdauction.lpmodel import AuctionSetting, BorderRef, ICCRef, border_rhs
from mdauction.oracles import border_violated_bruteforce, icc_violations_direct
from mdauction.separation import (
    Mode,
    RegionSpec,
    border_prefix_scan,
    find_border_violations,
    find_icc_violations,
    icc_violation_arrays,
    local_region,
    region_pairs,
)
from mdauction.typespace import Box, TableDensity, build_grid, discretize_density


@pytest.fixture
def grid5():
    return build_grid(Box((0, 0), (1, 1)), 4)


def test_interior_level_one(grid5):
    v = grid5.index_of((0.5, 0.5))
    assert len(local_region(v, 1, grid5)) == 8


def test_interior_level_two(grid5):
    v = grid5.index_of((0.5, 0.5))
    pts = {tuple(grid5.points[i]) for i in local_region(v, 2, grid5)}
    assert len(pts) == 13
    assert (0.0, 0.0) in pts and (0.0, 0.75) not in pts


def test_lower_corner_has_only_neighbours(grid5):
    for L in (1, 2, 5):
        pts = {tuple(grid5.points[i]) for i in local_region(0, L, grid5)}
        assert pts == {(0.0, 0.25), (0.25, 0.0), (0.25, 0.25)}


def test_region_never_contains_point(grid5):
    for v in range(grid5.size):
        assert v not in local_region(v, 3, grid5)


def test_zero_solution_has_no_violations(grid5):
    s = make_setting((0, 0), (1, 1), 4, N=2)
    Q, U = np.zeros((s.n, 2)), np.zeros(s.n)
    for mode in Mode:
        assert find_icc_violations(Q, U, s.grid, RegionSpec(1, mode)) == []
    assert find_border_violations(Q, s) == []


def test_full_scan_example():
    g = build_grid(Box((0,), (1,)), 2)
    Q, U = np.ones((3, 1)), np.zeros(3)
    found = {v.ref: v.amount for v in find_icc_violations(Q, U, g, RegionSpec(1, Mode.FULL))}
    assert found[ICCRef(2, 0)] == pytest.approx(1.0)


def test_local_scan_example():
    g = build_grid(Box((0,), (1,)), 2)
    Q, U = np.ones((3, 1)), np.zeros(3)
    found = {v.ref: v.amount for v in find_icc_violations(Q, U, g, RegionSpec(1, Mode.LOCAL))}
    assert found[ICCRef(2, 1)] == pytest.approx(0.5)
    assert ICCRef(2, 0) not in found


def test_icc_output_sorted():
    rng = np.random.default_rng(3)
    g = build_grid(Box((0, 0), (1, 1)), 5)
    Q, U = rng.uniform(size=(g.size, 2)), rng.uniform(size=g.size)
    for mode in Mode:
        refs = [(v.ref.src, v.ref.dst) for v in find_icc_violations(Q, U, g, RegionSpec(2, mode))]
        assert refs == sorted(refs) and len(refs) > 0


def test_border_two_point_example():
    s = make_setting((0,), (1,), 1, N=2)
    found = find_border_violations(np.array([[1.0], [0.0]]), s)
    assert len(found) == 1
    assert found[0].ref == BorderRef((0,))
    assert found[0].amount == pytest.approx(0.25)


def test_single_buyer_never_violated_when_s_at_most_one():
    rng = np.random.default_rng(0)
    s = make_setting((0, 0), (1, 1), 6, N=1)
    for _ in range(20):
        Q = rng.uniform(size=(s.n, 2))
        Q /= Q.sum(axis=1, keepdims=True).max()
        assert find_border_violations(Q, s) == []


def test_border_ties_break_by_index():
    s = make_setting((0, 0), (1, 1), 2, N=3)
    order, _ = border_prefix_scan(np.full((s.n, 2), 0.2), s)
    assert order.tolist() == list(range(s.n))


def test_full_mode_pairs_are_all_ordered_pairs(grid5):
    src, dst = region_pairs(grid5, RegionSpec(1, Mode.FULL))
    assert len(src) == grid5.size * (grid5.size - 1)
    assert len(set(zip(src.tolist(), dst.tolist()))) == len(src)


def test_local_pairs_subset_of_full(grid5):
    local = set(zip(*(a.tolist() for a in region_pairs(grid5, RegionSpec(2, Mode.LOCAL)))))
    full = set(zip(*(a.tolist() for a in region_pairs(grid5, RegionSpec(1, Mode.FULL)))))
    assert local < full


# -- properties -------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.integers(1, 4))
def test_regions_grow_with_level(J, T, L):
    g = build_grid(Box((0,) * J, (1,) * J), T if J < 3 else min(T, 3))
    for v in range(g.size):
        assert set(local_region(v, L, g)) <= set(local_region(v, L + 1, g))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_local_violations_found_by_full_scan(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(Box((0, 0), (1, 2)), int(rng.integers(1, 5)))
    Q, U = rng.uniform(size=(g.size, 2)), rng.uniform(size=g.size)
    L = int(rng.integers(1, 4))
    local = set(zip(*(a.tolist() for a in icc_violation_arrays(Q, U, g, RegionSpec(L, Mode.LOCAL), 1e-7)[:2])))
    full = set(zip(*(a.tolist() for a in icc_violation_arrays(Q, U, g, RegionSpec(1, Mode.FULL), 1e-7)[:2])))
    assert local <= full


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_full_scan_equals_direct_rows(seed):
    rng = np.random.default_rng(seed)
    s = make_setting((0, 0), (1, 1), int(rng.integers(1, 4)))
    Q, U = rng.uniform(size=(s.n, 2)), rng.uniform(size=s.n)
    src, dst, _ = icc_violation_arrays(Q, U, s.grid, RegionSpec(1, Mode.FULL), 1e-7)
    assert set(zip(src.tolist(), dst.tolist())) == icc_violations_direct(Q, U, s)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prefix_dominates_every_subset(seed):
    """Whenever some subset violates the Border inequality, a sorted prefix
    violates it by at least as much."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    g = build_grid(Box((0,), (1,)), n - 1)
    s_ = discretize_density(TableDensity(rng.uniform(0.05, 1, n), (n,)), g)
    setting = AuctionSetting(int(rng.integers(1, 4)), (0.0,), g, s_)
    Q = rng.uniform(size=(n, 1)) * rng.uniform(0.5, 2)
    _, excess = border_prefix_scan(Q, setting)
    f, q = setting.f, Q[:, 0]
    worst = max(
        setting.N * sum(f[a] * q[a] for a in A) - border_rhs(setting, A)
        for size in range(1, n + 1)
        for A in itertools.combinations(range(n), size)
    )
    if worst > 0:
        assert excess.max() >= worst - 1e-12
    assert bool(excess.max() > 1e-7) == border_violated_bruteforce(Q, setting)
