"""LP backend on top of the HiGHS dual simplex.

:class:`HighsLP` keeps one HiGHS model alive so that rows can be appended
and deleted between solves; HiGHS then restarts from the previous basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import highspy
import numpy as np

from .lpmodel import EQ, GE, LE, LinearProgram, Row

__all__ = ["LPError", "Infeasible", "Unbounded", "IterationLimit", "LPResult", "HighsLP", "lp_solve"]

_INF = highspy.kHighsInf
_Status = highspy.HighsModelStatus


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


class IterationLimit(LPError):
    """A loop ran out of iterations; ``incumbent`` holds the best solution so far."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    slack: np.ndarray  # per row in model order; >= 0 when satisfied


def _bounds(row: Row) -> tuple[float, float]:
    if row.sense == LE:
        return -_INF, row.rhs
    if row.sense == GE:
        return row.rhs, _INF
    return row.rhs, row.rhs


class HighsLP:
    """Maximization LP whose row set can change between solves."""

    def __init__(self, n_vars: int, objective, lower, upper, tol: float = 1e-9):
        if n_vars < 1:
            raise ValueError("program has no variables")
        self.n_vars = n_vars
        self.tol = tol
        self.rows: list[Row] = []
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("simplex_strategy", 1)  # dual simplex, keeps vertex solutions
        h.setOptionValue("primal_feasibility_tolerance", tol)
        h.setOptionValue("dual_feasibility_tolerance", tol)
        h.setOptionValue("random_seed", 0)
        lo = np.where(np.isfinite(lower), lower, -_INF).astype(float)
        hi = np.where(np.isfinite(upper), upper, _INF).astype(float)
        h.addVars(n_vars, lo, hi)
        h.changeColsCost(n_vars, np.arange(n_vars, dtype=np.int32), -np.asarray(objective, dtype=float))
        self._h = h

    @classmethod
    def from_program(cls, program: LinearProgram, tol: float = 1e-9) -> "HighsLP":
        lp = cls(program.n_vars, program.objective, program.lower, program.upper, tol)
        lp.add_rows(program.rows)
        return lp

    def __len__(self) -> int:
        return len(self.rows)

    def add_rows(self, rows: Sequence[Row]) -> None:
        rows = list(rows)
        if not rows:
            return
        for r in rows:
            if len(r.var) and (r.var.max() >= self.n_vars or r.var.min() < 0):
                raise ValueError(f"row {r.ref} references an unknown variable")
        lens = np.array([len(r.var) for r in rows])
        starts = np.concatenate(([0], np.cumsum(lens)[:-1])).astype(np.int32)
        idx = np.concatenate([r.var for r in rows]).astype(np.int32)
        val = np.concatenate([r.coef for r in rows]).astype(float)
        lo, hi = np.array([_bounds(r) for r in rows]).T
        self._h.addRows(len(rows), lo, hi, len(idx), starts, idx, val)
        self.rows.extend(rows)

    def delete_rows(self, positions: Iterable[int]) -> None:
        pos = np.unique(np.fromiter(positions, dtype=np.int32))
        if len(pos) == 0:
            return
        self._h.deleteRows(len(pos), pos)
        keep = np.ones(len(self.rows), dtype=bool)
        keep[pos] = False
        self.rows = [r for r, k in zip(self.rows, keep) if k]

    def solve(self) -> LPResult:
        h = self._h
        h.run()
        status = h.getModelStatus()
        if status == _Status.kUnboundedOrInfeasible:
            # presolve could not tell which; a plain simplex run can
            h.setOptionValue("presolve", "off")
            h.run()
            h.setOptionValue("presolve", "choose")
            status = h.getModelStatus()
        if status == _Status.kInfeasible:
            raise Infeasible("LP is infeasible")
        if status in (_Status.kUnbounded, _Status.kUnboundedOrInfeasible):
            raise Unbounded("LP is unbounded")
        if status == _Status.kIterationLimit:
            raise IterationLimit("LP iteration limit reached")
        if status != _Status.kOptimal:
            raise LPError(f"HiGHS returned {h.modelStatusToString(status)}")
        sol = h.getSolution()
        x = np.array(sol.col_value, dtype=float)
        act = np.array(sol.row_value, dtype=float)
        slack = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            if r.sense == LE:
                slack[i] = r.rhs - act[i]
            elif r.sense == GE:
                slack[i] = act[i] - r.rhs
            else:
                slack[i] = -abs(act[i] - r.rhs)
        return LPResult(x=x, objective=-float(h.getInfo().objective_function_value), slack=slack)


def lp_solve(program: LinearProgram, tol: float = 1e-9) -> LPResult:
    """Solve ``program`` (maximize) from scratch.

    Returns a vertex optimum, its objective, and the slack of every row in
    program order.  Raises :class:`Infeasible`, :class:`Unbounded` or
    :class:`IterationLimit`.
    """
    return HighsLP.from_program(program, tol).solve()
