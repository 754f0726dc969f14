"""Separation oracles for the incentive and Border constraint families."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lpmodel import AuctionSetting, BorderRef, ConstraintRef, ICCRef
from .typespace import TypeGrid

__all__ = [
    "Mode",
    "RegionSpec",
    "Violation",
    "DEFAULT_TOL",
    "local_region",
    "region_pairs",
    "icc_slacks",
    "icc_violation_arrays",
    "find_icc_violations",
    "border_prefix_scan",
    "find_border_violations",
]

DEFAULT_TOL = 1e-7


class Mode(enum.Enum):
    LOCAL = "local"
    FULL = "full"


@dataclass(frozen=True)
class RegionSpec:
    level: int = 1
    mode: Mode = Mode.LOCAL

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("region level must be >= 1")


@dataclass(frozen=True)
class Violation:
    ref: ConstraintRef
    amount: float


@lru_cache(maxsize=64)
def _offsets(J: int, L: int) -> np.ndarray:
    """Index offsets of the Chebyshev-1 shell plus the downward block of side L."""
    shell = {o for o in itertools.product((-1, 0, 1), repeat=J) if any(o)}
    block = {o for o in itertools.product(range(-L, 1), repeat=J) if any(o)}
    return np.array(sorted(shell | block), dtype=int).reshape(-1, J)


def local_region(v: int, L: int, grid: TypeGrid) -> np.ndarray:
    """Grid indices checked around ``v`` at region level ``L`` (sorted).

    All Chebyshev neighbours at distance one, plus every point lying
    componentwise below ``v`` by at most ``L`` steps in each dimension.
    """
    if L < 1:
        raise ValueError("region level must be >= 1")
    shape = np.asarray(grid.shape)
    base = np.asarray(np.unravel_index(v, grid.shape))
    cand = base + _offsets(grid.dim, L)
    ok = np.all((cand >= 0) & (cand < shape), axis=1)
    return np.sort(np.ravel_multi_index(tuple(cand[ok].T), grid.shape))


@lru_cache(maxsize=32)
def _region_pairs_cached(shape: tuple[int, ...], L: int) -> tuple[np.ndarray, np.ndarray]:
    n = int(np.prod(shape))
    mi = np.stack(np.unravel_index(np.arange(n), shape), axis=1)
    src_parts, dst_parts = [], []
    for o in _offsets(len(shape), L):
        cand = mi + o
        ok = np.all((cand >= 0) & (cand < np.asarray(shape)), axis=1)
        src_parts.append(np.nonzero(ok)[0])
        dst_parts.append(np.ravel_multi_index(tuple(cand[ok].T), shape))
    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    src.setflags(write=False)
    dst.setflags(write=False)
    return src, dst


def region_pairs(grid: TypeGrid, region: RegionSpec) -> tuple[np.ndarray, np.ndarray]:
    """All ordered (v, v_hat) pairs admitted by ``region``, sorted by (v, v_hat)."""
    if region.mode is Mode.FULL:
        n = grid.size
        src, dst = np.divmod(np.arange(n * n), n)
        keep = src != dst
        return src[keep], dst[keep]
    return _region_pairs_cached(grid.shape, region.level)


def icc_slacks(Q: np.ndarray, U: np.ndarray, grid: TypeGrid, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """``U(v) - U(v_hat) - sum_j (v_j - v_hat_j) Q_j(v_hat)`` for each pair."""
    P = grid.points
    return U[src] - U[dst] - np.einsum("ij,ij->i", P[src] - P[dst], Q[dst])


def _full_scan(Q, U, grid, tol, chunk=256):
    P = grid.points
    n = grid.size
    srcs, dsts, amts = [], [], []
    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        diff = P[rows, None, :] - P[None, :, :]
        slack = U[rows, None] - U[None, :] - np.einsum("abj,bj->ab", diff, Q)
        slack[rows - start, rows] = np.inf
        a, b = np.nonzero(slack < -tol)
        srcs.append(rows[a])
        dsts.append(b)
        amts.append(-slack[a, b])
    return np.concatenate(srcs), np.concatenate(dsts), np.concatenate(amts)


def icc_violation_arrays(
    Q: np.ndarray,
    U: np.ndarray,
    grid: TypeGrid,
    region: RegionSpec,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of :func:`find_icc_violations`: ``(src, dst, amount)``."""
    Q = np.asarray(Q, dtype=float).reshape(grid.size, grid.dim)
    U = np.asarray(U, dtype=float)
    if region.mode is Mode.FULL:
        return _full_scan(Q, U, grid, tol)
    src, dst = region_pairs(grid, region)
    slack = icc_slacks(Q, U, grid, src, dst)
    bad = slack < -tol
    return src[bad], dst[bad], -slack[bad]


def find_icc_violations(Q, U, grid: TypeGrid, region: RegionSpec, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Violated incentive constraints among the pairs admitted by ``region``.

    Ordered by ``(v, v_hat)`` grid index.
    """
    src, dst, amt = icc_violation_arrays(Q, U, grid, region, tol)
    return [Violation(ICCRef(int(a), int(b)), float(x)) for a, b, x in zip(src, dst, amt)]


def border_prefix_scan(Q, setting: AuctionSetting) -> tuple[np.ndarray, np.ndarray]:
    """Sort points by total allocation (descending, ties by index) and
    return ``(order, excess)`` where ``excess[k]`` is LHS minus RHS of the
    Border inequality for the first ``k + 1`` points of ``order``.
    """
    Q = np.asarray(Q, dtype=float).reshape(setting.n, setting.J)
    s = Q.sum(axis=1)
    f = setting.f
    order = np.lexsort((np.arange(setting.n), -s))
    lhs = setting.N * np.cumsum(f[order] * s[order])
    # mass outside each prefix, summed from the tail to avoid 1 - cumsum cancellation
    tail = np.cumsum(f[order][::-1])[::-1]
    outside = np.append(tail[1:], 0.0)
    rhs = 1.0 - outside ** setting.N
    return order, lhs - rhs


def find_border_violations(Q, setting: AuctionSetting, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Violated Border inequalities among the sorted prefix sets."""
    order, excess = border_prefix_scan(Q, setting)
    out = []
    for k in np.nonzero(excess > tol)[0]:
        out.append(Violation(BorderRef(tuple(order[: k + 1].tolist()), level=int(k + 1)), float(excess[k])))
    return out
