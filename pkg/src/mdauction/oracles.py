"""Brute-force reference checks for the separation oracles and the solver.

These evaluate constraints straight from their definitions, without the
sorting and vectorization tricks of :mod:`mdauction.separation`, and are
meant for small grids only.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ebm import myerson_oracle
from .lpmodel import AuctionSetting, VariableLayout, border_rhs, icc_row
from .separation import DEFAULT_TOL, Mode, RegionSpec, border_prefix_scan, icc_violation_arrays
from .solver import SolverConfig, solve_all_constraints, solve_optimal_auction
from .typespace import Box, TableDensity, Uniform, build_grid, discretize_density

__all__ = [
    "Check",
    "MAX_SUBSET_POINTS",
    "border_violated_bruteforce",
    "icc_violations_direct",
    "random_setting",
    "border_agreement_trial",
    "icc_agreement_trial",
    "myerson_checks",
    "cutting_plane_checks",
    "run_validation",
]

MAX_SUBSET_POINTS = 16


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.detail}"


def border_violated_bruteforce(Q: np.ndarray, setting: AuctionSetting, tol: float = DEFAULT_TOL) -> bool:
    """True if some nonempty subset of grid points violates the Border inequality."""
    n = setting.n
    if n > MAX_SUBSET_POINTS:
        raise ValueError(f"subset enumeration is limited to {MAX_SUBSET_POINTS} points")
    f = setting.f
    q = np.asarray(Q).sum(axis=1)
    for size in range(1, n + 1):
        for A in itertools.combinations(range(n), size):
            lhs = setting.N * sum(f[a] * q[a] for a in A)
            if lhs - border_rhs(setting, A) > tol:
                return True
    return False


def icc_violations_direct(Q: np.ndarray, U: np.ndarray, setting: AuctionSetting, tol: float = DEFAULT_TOL) -> set:
    """All ordered pairs (v, w) whose incentive row is violated, one row at a time."""
    layout = VariableLayout.for_setting(setting)
    x = np.concatenate((np.asarray(Q).ravel(), np.asarray(U)))
    out = set()
    for v in range(setting.n):
        for w in range(setting.n):
            if v != w and icc_row(layout, v, w, setting.grid).slack(x) < -tol:
                out.add((v, w))
    return out


def random_setting(rng: np.random.Generator, max_points: int, J: int | None = None, N: int | None = None) -> AuctionSetting:
    """A small random grid setting with a random table density."""
    while True:
        dim = J if J is not None else int(rng.integers(1, 3))
        T = int(rng.integers(1, 6))
        lower = rng.uniform(0, 2, size=dim).round(2)
        upper = lower + rng.uniform(0.5, 2, size=dim).round(2)
        grid = build_grid(Box(tuple(lower), tuple(upper)), T)
        if 2 <= grid.size <= max_points:
            break
    weights = rng.uniform(0.05, 1.0, size=grid.size)
    density = discretize_density(TableDensity(weights, grid.shape), grid)
    buyers = N if N is not None else int(rng.integers(1, 4))
    costs = tuple(rng.uniform(0, 0.5, size=dim).round(2))
    return AuctionSetting(buyers, costs, grid, density)


def border_agreement_trial(rng: np.random.Generator, max_points: int = 12) -> bool:
    """Prefix scan and subset enumeration agree on whether any Border row is violated."""
    setting = random_setting(rng, max_points)
    Q = rng.uniform(0, 1, size=(setting.n, setting.J))
    Q /= max(1.0, Q.sum(axis=1).max())
    # push some allocations up so that violations occur regularly
    Q *= rng.uniform(0.5, 2.0)
    _, excess = border_prefix_scan(Q, setting)
    return bool(np.any(excess > DEFAULT_TOL)) == border_violated_bruteforce(Q, setting)


def icc_agreement_trial(rng: np.random.Generator, max_points: int = 12) -> bool:
    """Full-mode scan and direct row evaluation flag exactly the same pairs."""
    setting = random_setting(rng, max_points)
    Q = rng.uniform(0, 1, size=(setting.n, setting.J))
    U = rng.uniform(0, 1, size=setting.n)
    src, dst, _ = icc_violation_arrays(Q, U, setting.grid, RegionSpec(1, Mode.FULL), DEFAULT_TOL)
    return set(zip(src.tolist(), dst.tolist())) == icc_violations_direct(Q, U, setting)


def myerson_checks(T: int = 20, buyers=(1, 2, 3), tol: float = 0.02) -> list[Check]:
    """Single-grade uniform [0, 1] grid optimum against the continuous benchmark."""
    grid = build_grid(Box((0.0,), (1.0,)), T)
    density = discretize_density(Uniform(), grid)
    out = []
    for N in buyers:
        sol = solve_optimal_auction(AuctionSetting(N, (0.0,), grid, density))
        ref = myerson_oracle(N, Uniform(), 0.0, 1.0)
        err = abs(sol.total_revenue - ref)
        out.append(Check(
            f"single grade, N={N}",
            bool(err <= tol and sol.certified),
            f"grid optimum {sol.total_revenue:.6f}, continuous benchmark {ref:.6f}, |diff| {err:.4f} (tolerance {tol})",
        ))
    return out


def cutting_plane_checks(rng: np.random.Generator, trials: int = 10, max_points: int = 30, tol: float = 1e-6) -> list[Check]:
    """Constraint generation against the all-constraints LP on random small settings."""
    out = []
    for t in range(trials):
        setting = random_setting(rng, max_points, J=2, N=int(rng.integers(1, 3)))
        sol = solve_optimal_auction(setting, SolverConfig())
        ref = solve_all_constraints(setting)
        diff = abs(sol.objective - ref.objective)
        out.append(Check(
            f"cutting plane vs all constraints #{t + 1} (n={setting.n}, N={setting.N})",
            bool(diff <= tol and sol.certified and ref.certified),
            f"{sol.objective:.9f} vs {ref.objective:.9f}",
        ))
    return out


def run_validation(seed: int = 0, trials: int = 1000, quick: bool = False) -> list[Check]:
    """The Myerson, brute-force separation and cutting-plane suites."""
    rng = np.random.default_rng(seed)
    if quick:
        trials = min(trials, 100)
    checks = myerson_checks(buyers=(1, 2) if quick else (1, 2, 3))
    agree = sum(border_agreement_trial(rng) for _ in range(trials))
    checks.append(Check("Border prefix scan vs subset enumeration", agree == trials, f"{agree}/{trials} trials agree"))
    agree = sum(icc_agreement_trial(rng) for _ in range(trials))
    checks.append(Check("full incentive scan vs direct rows", agree == trials, f"{agree}/{trials} trials agree"))
    checks += cutting_plane_checks(rng, trials=3 if quick else 10)
    return checks
