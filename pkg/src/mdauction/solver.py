"""Cutting-plane solver for the discretized optimal auction LP.

The loop keeps a pool of active constraint rows.  An inner loop solves the
LP over the pool and separates incentive constraints inside a local region
(adjacent points plus a downward block of side ``L``) together with the
Border inequalities, until the local oracle comes back empty.  An outer
loop then scans *all* incentive constraints; violated ones are remembered
in an accumulator that is re-added on every later pool update, the region
grows by one step and the inner loop restarts.  Inactive rows are dropped
whenever the relaxation value strictly improves on the incumbent bound.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .backend import HighsLP, Infeasible, IterationLimit, LPError, LPResult, Unbounded, lp_solve
from .lpmodel import (
    EQ,
    GE,
    AuctionSetting,
    BorderRef,
    ICCRef,
    Row,
    VariableLayout,
    assemble,
    base_rows,
    border_row,
    icc_row,
)
from .separation import Mode, RegionSpec, border_prefix_scan, icc_violation_arrays

__all__ = [
    "LPError",
    "Infeasible",
    "Unbounded",
    "IterationLimit",
    "LPResult",
    "SolverConfig",
    "PoolState",
    "MechanismSolution",
    "lp_solve",
    "select_inactive",
    "select_border_cuts",
    "solve_optimal_auction",
    "solve_all_constraints",
    "exclusion_region",
    "certify",
]

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Tolerances and limits for :func:`solve_optimal_auction`.

    ``max_border_cuts`` caps how many violated Border prefixes enter the pool
    per round (``None`` adds all of them).
    """

    violation_tol: float = 1e-7
    lp_tol: float = 1e-9
    inactive_slack: float = 1e-6
    max_outer: int = 50
    max_inner: int = 200
    tau: float = 1e-6
    max_border_cuts: int | None = None
    inactive_age: int = 5

    def __post_init__(self):
        for name in ("violation_tol", "lp_tol", "inactive_slack", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.tau > self.lp_tol:
            raise ValueError("exclusion threshold must exceed the LP tolerance")
        if not self.violation_tol > self.lp_tol:
            raise ValueError("violation tolerance must exceed the LP tolerance")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")
        if self.inactive_age < 1:
            raise ValueError("inactive_age must be >= 1")
        if self.max_border_cuts is not None and self.max_border_cuts < 1:
            raise ValueError("max_border_cuts must be positive or None")


@dataclass
class PoolState:
    """Cut pool of one solve.

    ``active`` maps constraint identity to row in LP order after the base
    rows; ``accumulated`` holds every incentive row the full scan reported;
    ``fresh`` the identities added by the latest pool update.  A row that
    comes back after being removed is ``pinned`` and never removed again,
    which rules out add/remove cycles.
    """

    base: list[Row]
    active: dict = field(default_factory=dict)
    accumulated: dict = field(default_factory=dict)
    fresh: set = field(default_factory=set)
    removed: set = field(default_factory=set)
    pinned: set = field(default_factory=set)
    slack_age: dict = field(default_factory=dict)
    best_bound: float = np.inf
    level: int = 1
    inner_iterations: int = 0
    outer_iterations: int = 0
    cuts_added: int = 0
    cuts_removed: int = 0
    trace: list = field(default_factory=list)

    def rows(self) -> list[Row]:
        return self.base + list(self.active.values())


@dataclass
class MechanismSolution:
    setting: AuctionSetting
    Q: np.ndarray
    U: np.ndarray
    M: np.ndarray
    objective: float
    certified: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_revenue(self) -> float:
        return self.setting.N * self.objective

    @property
    def allocation(self) -> np.ndarray:
        """Total interim probability of receiving any grade."""
        return self.Q.sum(axis=1)

    def exclusion_mask(self, tau: float = 1e-6) -> np.ndarray:
        return exclusion_region(self, tau)


def select_inactive(pool: PoolState, slacks: Sequence[float], config: SolverConfig) -> list:
    """Identities of pooled ICC/Border rows that are slack, were not added by
    the latest update and are not pinned.  ``slacks`` is aligned with
    ``pool.rows()``."""
    slacks = np.asarray(slacks)
    nb = len(pool.base)
    out = []
    for ref, s in zip(pool.active, slacks[nb:]):
        if (
            isinstance(ref, (ICCRef, BorderRef))
            and s > config.inactive_slack
            and ref not in pool.fresh
            and ref not in pool.pinned
            and pool.slack_age.get(ref, 1) >= config.inactive_age
        ):
            out.append(ref)
    return out


def select_border_cuts(excess: np.ndarray, tol: float, limit: int | None) -> np.ndarray:
    """Prefix lengths (minus one) of the Border cuts to add.

    All violated prefixes when ``limit`` is None; otherwise the most violated
    prefix, the last violated one and evenly spaced violated prefixes in
    between, at most ``limit`` in total.
    """
    ks = np.nonzero(excess > tol)[0]
    if limit is None or len(ks) <= limit:
        return ks
    picks = {int(ks[np.argmax(excess[ks])]), int(ks[-1])}
    spaced = ks[np.linspace(0, len(ks) - 1, limit - 1).round().astype(int)]
    for k in spaced:
        if len(picks) >= limit:
            break
        picks.add(int(k))
    return np.array(sorted(picks))


def _icc_rows(layout, grid, src, dst) -> list[Row]:
    return [icc_row(layout, int(a), int(b), grid) for a, b in zip(src, dst)]


def _solution_from_x(setting: AuctionSetting, x, objective: float, certified: bool, diag) -> MechanismSolution:
    layout = VariableLayout.for_setting(setting)
    Q, U = layout.split(x)
    Q, U = Q.copy(), U.copy()
    M = np.einsum("ij,ij->i", setting.grid.points, Q) - U
    return MechanismSolution(setting, Q, U, M, float(objective), certified, diag)


def certify(Q, U, setting: AuctionSetting, tol: float) -> tuple[int, int]:
    """Counts of violated incentive constraints (full scan) and Border prefixes."""
    src, _, _ = icc_violation_arrays(Q, U, setting.grid, RegionSpec(1, Mode.FULL), tol)
    _, excess = border_prefix_scan(Q, setting)
    return len(src), int(np.sum(excess > tol))


class _Pool:
    """Keeps a :class:`PoolState` and the live HiGHS model in sync."""

    def __init__(self, setting: AuctionSetting, config: SolverConfig):
        self.layout = VariableLayout.for_setting(setting)
        base = base_rows(self.layout, setting)
        program = assemble(setting, base)
        self.n_lp_base = len(program.rows)  # NonNeg rows live on as variable bounds
        self.state = PoolState(base=base)
        self.lp = HighsLP.from_program(program, config.lp_tol)

    def add(self, rows: Sequence[Row]) -> set:
        st = self.state
        new = []
        for r in rows:
            if r.ref not in st.active:
                st.active[r.ref] = r
                new.append(r)
                if r.ref in st.removed:
                    st.pinned.add(r.ref)
        self.lp.add_rows(new)
        st.cuts_added += len(new)
        return {r.ref for r in new}

    def remove(self, refs: Sequence) -> None:
        if not refs:
            return
        doomed = set(refs)
        positions = [self.n_lp_base + i for i, ref in enumerate(self.state.active) if ref in doomed]
        self.lp.delete_rows(positions)
        for ref in refs:
            del self.state.active[ref]
        self.state.removed |= doomed
        self.state.cuts_removed += len(doomed)

    def pool_slacks(self, res: LPResult) -> np.ndarray:
        """LP slacks re-aligned to ``state.rows()`` (base rows reported as 0)."""
        return np.concatenate((np.zeros(len(self.state.base)), res.slack[self.n_lp_base:]))


def solve_optimal_auction(setting: AuctionSetting, config: SolverConfig | None = None) -> MechanismSolution:
    """Revenue-optimal symmetric mechanism on the grid by constraint generation.

    The returned solution carries ``certified=True`` when a final full scan
    finds no incentive or Border violation above ``config.violation_tol``.
    """
    config = config or SolverConfig()
    if setting.n < 2:
        raise ValueError("grid must have at least two points")
    t0 = time.perf_counter()
    grid = setting.grid
    tol = config.violation_tol
    pool = _Pool(setting, config)
    st = pool.state
    layout = pool.layout
    result = None

    while True:
        st.outer_iterations += 1
        if st.outer_iterations > config.max_outer:
            raise IterationLimit("outer iteration limit reached", _incumbent(setting, result, st, t0, tol))
        region = RegionSpec(st.level, Mode.LOCAL)
        inner = 0
        while True:
            inner += 1
            st.inner_iterations += 1
            if inner > config.max_inner:
                raise IterationLimit("inner iteration limit reached", _incumbent(setting, result, st, t0, tol))
            result = pool.lp.solve()
            st.trace.append(result.objective)
            Q, U = layout.split(result.x)
            src, dst, _ = icc_violation_arrays(Q, U, grid, region, tol)
            found = _icc_rows(layout, grid, src, dst)
            order, excess = border_prefix_scan(Q, setting)
            for k in select_border_cuts(excess, tol, config.max_border_cuts):
                found.append(border_row(layout, order[: k + 1], setting, level=int(k + 1)))
            logger.debug(
                "outer %d inner %d L=%d rows=%d obj=%.10f icc=%d border=%d",
                st.outer_iterations, st.inner_iterations, st.level,
                len(st.active), result.objective, len(src), len(found) - len(src),
            )
            if not found:
                break
            slacks = pool.pool_slacks(result)
            if config.inactive_age > 1:
                _age(st, slacks, config.inactive_slack)
            if result.objective < st.best_bound:
                pool.remove(select_inactive(st, slacks, config))
                st.best_bound = result.objective
            st.fresh = pool.add(found) | pool.add(st.accumulated.values())
        Q, U = layout.split(result.x)
        src, dst, _ = icc_violation_arrays(Q, U, grid, RegionSpec(st.level, Mode.FULL), tol)
        logger.debug("outer %d full scan: %d violated", st.outer_iterations, len(src))
        if len(src) == 0:
            break
        new = _icc_rows(layout, grid, src, dst)
        st.accumulated.update((r.ref, r) for r in new)
        st.fresh = pool.add(new)
        st.level += 1

    n_icc, n_border = certify(Q, U, setting, tol)
    diag = _diagnostics(st, t0, n_icc, n_border)
    return _solution_from_x(setting, result.x, result.objective, n_icc == 0 and n_border == 0, diag)


def _age(st: PoolState, slacks, threshold) -> None:
    nb = len(st.base)
    st.slack_age = {
        ref: (st.slack_age.get(ref, 0) + 1 if s > threshold else 0)
        for ref, s in zip(st.active, slacks[nb:])
    }


def _diagnostics(st: PoolState, t0: float, n_icc: int, n_border: int) -> dict:
    return {
        "outer_iterations": st.outer_iterations,
        "inner_iterations": st.inner_iterations,
        "final_level": st.level,
        "active_rows": len(st.active),
        "cuts_added": st.cuts_added,
        "cuts_removed": st.cuts_removed,
        "icc_violations": n_icc,
        "border_violations": n_border,
        "wall_time": time.perf_counter() - t0,
        "objective_trace": list(st.trace),
    }


def _incumbent(setting, result, st, t0, tol):
    if result is None:
        return None
    Q, U = VariableLayout.for_setting(setting).split(result.x)
    n_icc, n_border = certify(Q, U, setting, tol)
    return _solution_from_x(setting, result.x, result.objective, False, _diagnostics(st, t0, n_icc, n_border))


def _linprog_max(setting: AuctionSetting, rows: list[Row], lp_tol: float):
    program = assemble(setting, rows)
    ub = [r for r in program.rows if r.sense != EQ]
    eq = [r for r in program.rows if r.sense == EQ]

    def stack(rs):
        sign = np.array([-1.0 if r.sense == GE else 1.0 for r in rs])
        lens = np.array([len(r.var) for r in rs])
        indptr = np.concatenate(([0], np.cumsum(lens)))
        data = np.concatenate([r.coef for r in rs]) * np.repeat(sign, lens)
        A = sp.csr_matrix((data, np.concatenate([r.var for r in rs]), indptr), shape=(len(rs), program.n_vars))
        return A, np.array([r.rhs for r in rs]) * sign

    A_ub, b_ub = stack(ub)
    A_eq, b_eq = stack(eq)
    bounds = list(zip(program.lower, np.where(np.isinf(program.upper), None, program.upper)))
    res = linprog(-program.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": lp_tol,
                                           "dual_feasibility_tolerance": lp_tol})
    if res.status != 0:
        raise LPError(res.message)
    return res.x, -res.fun


def solve_all_constraints(
    setting: AuctionSetting,
    tol: float = 1e-7,
    lp_tol: float = 1e-9,
    max_rounds: int = 500,
) -> MechanismSolution:
    """Reference optimum for small grids without constraint generation on ICC.

    Every ordered incentive pair is in the LP from the start; Border prefixes
    of the current optimum's ordering are appended until none is violated.
    Solved by ``scipy.optimize.linprog`` from scratch each round, so it shares
    no pool or warm-start state with :func:`solve_optimal_auction`.
    """
    t0 = time.perf_counter()
    layout = VariableLayout.for_setting(setting)
    n = setting.n
    rows = base_rows(layout, setting)
    rows += [icc_row(layout, v, w, setting.grid) for v in range(n) for w in range(n) if v != w]
    seen = set()
    for rnd in range(1, max_rounds + 1):
        x, obj = _linprog_max(setting, rows, lp_tol)
        Q, U = layout.split(x)
        order, excess = border_prefix_scan(Q, setting)
        new = [k for k in np.nonzero(excess > tol)[0] if BorderRef(tuple(order[: k + 1])) not in seen]
        if not new:
            n_icc, n_border = certify(Q, U, setting, tol)
            diag = {"rounds": rnd, "wall_time": time.perf_counter() - t0,
                    "icc_violations": n_icc, "border_violations": n_border}
            return _solution_from_x(setting, x, obj, n_icc == 0 and n_border == 0, diag)
        for k in new:
            r = border_row(layout, order[: k + 1], setting, level=int(k + 1))
            seen.add(r.ref)
            rows.append(r)
    raise IterationLimit("Border fixpoint not reached")


def exclusion_region(solution: MechanismSolution, tau: float = 1e-6) -> np.ndarray:
    """Boolean mask of grid points whose total allocation is at most ``tau``."""
    return np.asarray(solution.Q).sum(axis=1) <= tau
