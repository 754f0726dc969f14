"""Finite LP approximation of the symmetric optimal auction problem.

Decision variables are the interim allocation probabilities ``Q_j(v)`` and
the interim utilities ``U(v)`` at every grid point ``v``.  The objective is
the per-buyer expected profit

    sum_v f(v) * [ sum_j (v_j - c_j) Q_j(v) - U(v) ],

subject to pairwise incentive compatibility, the symmetric Border
feasibility inequalities, ``U(lower corner) = 0`` and ``Q >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .typespace import DiscreteDensity, TypeGrid

__all__ = [
    "AuctionSetting",
    "VariableLayout",
    "ICCRef",
    "BorderRef",
    "LowerCorner",
    "NonNeg",
    "ConstraintRef",
    "Row",
    "LinearProgram",
    "build_objective",
    "icc_row",
    "border_row",
    "border_rhs",
    "base_rows",
    "assemble",
]

LE, GE, EQ = "<=", ">=", "=="


@dataclass(frozen=True, eq=False)
class AuctionSetting:
    N: int
    costs: tuple[float, ...]
    grid: TypeGrid
    density: DiscreteDensity

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        costs = tuple(float(c) for c in self.costs)
        if len(costs) != self.grid.dim:
            raise ValueError(f"got {len(costs)} costs for a {self.grid.dim}-dimensional type space")
        if any(c < 0 for c in costs):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "costs", costs)
        if not self.density.grid.same_as(self.grid):
            raise ValueError("density is defined on a different grid")

    @property
    def J(self) -> int:
        return self.grid.dim

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def f(self) -> np.ndarray:
        return self.density.mass

    def with_buyers(self, N: int) -> "AuctionSetting":
        return AuctionSetting(N=N, costs=self.costs, grid=self.grid, density=self.density)


@dataclass(frozen=True)
class VariableLayout:
    """``Q_j(v)`` at ``v*J + j``, then ``U(v)`` at ``n*J + v``."""

    n: int
    J: int

    @classmethod
    def for_setting(cls, setting: AuctionSetting) -> "VariableLayout":
        return cls(setting.n, setting.J)

    @property
    def size(self) -> int:
        return self.n * (self.J + 1)

    def q(self, v, j):
        return v * self.J + j

    def u(self, v):
        return self.n * self.J + v

    def q_block(self, v) -> np.ndarray:
        return v * self.J + np.arange(self.J)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a solution vector into an ``(n, J)`` Q matrix and ``U``."""
        x = np.asarray(x, dtype=float)
        return x[: self.n * self.J].reshape(self.n, self.J), x[self.n * self.J:]


# -- constraint identities ----------------------------------------------------

@dataclass(frozen=True)
class ICCRef:
    """Type ``src`` must not gain by reporting ``dst``."""

    src: int
    dst: int

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("ICC pair needs two distinct types")


@dataclass(frozen=True)
class BorderRef:
    """Border inequality over a set of grid points.

    Identity is the member set; ``level`` only records the rank at which the
    set was found in the sorted-prefix scan.
    """

    members: tuple[int, ...]
    level: int = field(default=0, compare=False)

    def __post_init__(self):
        members = tuple(sorted(int(m) for m in self.members))
        if not members:
            raise ValueError("Border set must be nonempty")
        object.__setattr__(self, "members", members)


@dataclass(frozen=True)
class LowerCorner:
    pass


@dataclass(frozen=True)
class NonNeg:
    point: int
    quality: int


ConstraintRef = ICCRef | BorderRef | LowerCorner | NonNeg


@dataclass(frozen=True, eq=False)
class Row:
    """Sparse linear constraint ``sum(coef * x[var]) <sense> rhs``."""

    ref: ConstraintRef
    var: np.ndarray
    coef: np.ndarray
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in (LE, GE, EQ):
            raise ValueError(f"bad sense {self.sense!r}")
        if len(np.unique(self.var)) != len(self.var):
            raise ValueError("duplicate variable in a row")

    def activity(self, x: np.ndarray) -> float:
        return float(np.dot(self.coef, np.asarray(x)[self.var]))

    def slack(self, x: np.ndarray) -> float:
        """Nonnegative when satisfied (distance from the bound for inequalities)."""
        a = self.activity(x)
        if self.sense == LE:
            return self.rhs - a
        if self.sense == GE:
            return a - self.rhs
        return -abs(a - self.rhs)


def build_objective(setting: AuctionSetting) -> np.ndarray:
    """Coefficients of the (maximized) per-buyer profit."""
    layout = VariableLayout.for_setting(setting)
    f = setting.f
    c = np.zeros(layout.size)
    margins = setting.grid.points - np.asarray(setting.costs)
    c[: layout.n * layout.J] = (f[:, None] * margins).ravel()
    c[layout.n * layout.J:] = -f
    return c


def icc_row(layout: VariableLayout, v: int, vhat: int, grid: TypeGrid) -> Row:
    """``U(v) - U(vhat) - sum_j (v_j - vhat_j) Q_j(vhat) >= 0``."""
    if v == vhat:
        raise ValueError("ICC row needs v != vhat")
    diff = grid.points[v] - grid.points[vhat]
    var = np.concatenate(([layout.u(v), layout.u(vhat)], layout.q_block(vhat)))
    coef = np.concatenate(([1.0, -1.0], -diff))
    return Row(ICCRef(int(v), int(vhat)), var, coef, GE, 0.0)


def border_rhs(setting: AuctionSetting, members: Iterable[int]) -> float:
    """``1 - (mass outside the set)**N``."""
    inside = np.zeros(setting.n, dtype=bool)
    inside[np.asarray(list(members), dtype=int)] = True
    outside = math.fsum(setting.f[~inside])
    return 1.0 - outside ** setting.N


def border_row(layout: VariableLayout, A: Sequence[int], setting: AuctionSetting, level: int = 0) -> Row:
    """``N * sum_{v in A} f(v) sum_j Q_j(v) <= 1 - (mass outside A)**N``."""
    ref = BorderRef(tuple(A), level)
    members = np.asarray(ref.members, dtype=int)
    var = (members[:, None] * layout.J + np.arange(layout.J)).ravel()
    coef = np.repeat(setting.N * setting.f[members], layout.J)
    return Row(ref, var, coef, LE, border_rhs(setting, members))


def base_rows(layout: VariableLayout, setting: AuctionSetting) -> list[Row]:
    """Rent-free lowest type plus ``Q_j(v) >= 0`` for every point and grade."""
    corner = setting.grid.lower_corner
    rows = [Row(LowerCorner(), np.array([layout.u(corner)]), np.array([1.0]), EQ, 0.0)]
    for v in range(layout.n):
        for j in range(layout.J):
            rows.append(Row(NonNeg(v, j), np.array([layout.q(v, j)]), np.array([1.0]), GE, 0.0))
    return rows


@dataclass
class LinearProgram:
    """Maximize ``objective @ x`` subject to ``rows`` and variable bounds.

    Single-variable ``NonNeg`` rows are carried as variable lower bounds.
    ``lower``/``upper`` may additionally hold bounds implied by the full
    constraint family; they never cut off a feasible point of it.
    """

    n_vars: int
    objective: np.ndarray
    rows: list[Row]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for r in self.rows:
            if len(r.var) and (r.var.max() >= self.n_vars or r.var.min() < 0):
                raise ValueError(f"row {r.ref} references an unknown variable")

    @property
    def refs(self) -> list:
        return [r.ref for r in self.rows]


def assemble(
    setting: AuctionSetting,
    rows: Sequence[Row],
    implied_bounds: bool = True,
) -> LinearProgram:
    """Build a :class:`LinearProgram` for ``setting`` from constraint rows.

    With ``implied_bounds`` the box ``0 <= Q <= 1``, ``U >= 0`` is put on the
    variables.  Every point satisfying the full ICC and Border families
    already lies in that box, so the optimum is unchanged, but relaxations
    holding only a few cuts stay bounded.
    """
    layout = VariableLayout.for_setting(setting)
    lower = np.full(layout.size, -np.inf)
    upper = np.full(layout.size, np.inf)
    if implied_bounds:
        lower[:] = 0.0
        upper[: layout.n * layout.J] = 1.0
    kept = []
    for r in rows:
        if isinstance(r.ref, NonNeg):
            lower[r.var[0]] = max(lower[r.var[0]], r.rhs / r.coef[0])
        else:
            kept.append(r)
    return LinearProgram(layout.size, build_objective(setting), kept, lower, upper)
