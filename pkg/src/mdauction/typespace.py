"""Discretized type spaces and discrete type densities.

A buyer type is a J-vector of valuations, one per quality grade.  The type
space is a box which is discretized with a common step ``epsilon`` in every
dimension, and a continuous density is turned into a probability mass
function on the resulting grid by normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import stats

__all__ = [
    "Box",
    "TypeGrid",
    "Uniform",
    "Beta",
    "TruncNormal",
    "Product",
    "Mixture",
    "TableDensity",
    "DistributionSpec",
    "DiscreteDensity",
    "build_grid",
    "eval_density",
    "density_values",
    "discretize_density",
]

# relative slack used when snapping coordinates onto the box boundary
_SNAP = 1e-9


@dataclass(frozen=True)
class Box:
    """Product of closed intervals ``[lower[j], upper[j]]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(x) for x in self.lower)
        upper = tuple(float(x) for x in self.upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ValueError("box bounds must be nonempty and of equal length")
        for j, (lo, hi) in enumerate(zip(lower, upper)):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise ValueError(f"degenerate box in dimension {j}: [{lo}, {hi}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def ranges(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, point, atol: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=float)
        tol = atol * self.ranges
        return bool(np.all(p >= np.asarray(self.lower) - tol) and np.all(p <= np.asarray(self.upper) + tol))

    def rescale(self, points: np.ndarray) -> np.ndarray:
        """Map points affinely onto the unit cube."""
        return (np.asarray(points, dtype=float) - np.asarray(self.lower)) / self.ranges


@dataclass(frozen=True, eq=False)
class TypeGrid:
    """Regular grid over a :class:`Box` with common step ``epsilon``.

    Points are enumerated in row-major order of the per-dimension indices,
    i.e. the last dimension varies fastest.
    """

    box: Box
    T: int
    epsilon: float
    coords: tuple[np.ndarray, ...]
    points: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.coords)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def multi_index(self) -> np.ndarray:
        """(n, J) integer array of per-dimension indices of each point."""
        return np.stack(np.unravel_index(np.arange(self.size), self.shape), axis=1)

    def point_at(self, index: int) -> np.ndarray:
        return self.points[index]

    def index_of(self, point) -> int:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"expected a {self.dim}-vector, got shape {p.shape}")
        steps = (p - np.asarray(self.box.lower)) / self.epsilon
        k = np.rint(steps).astype(int)
        if np.any(np.abs(steps - k) > 1e-6) or np.any(k < 0) or np.any(k >= np.asarray(self.shape)):
            raise KeyError(f"{p} is not a grid point")
        return int(np.ravel_multi_index(tuple(k), self.shape))

    @property
    def lower_corner(self) -> int:
        return 0

    def same_as(self, other: "TypeGrid") -> bool:
        return (
            self is other
            or (self.box == other.box and self.T == other.T and np.array_equal(self.points, other.points))
        )


def build_grid(box: Box, T: int) -> TypeGrid:
    """Discretize ``box`` into ``T`` intervals along its shortest side.

    The step is ``min_j (upper_j - lower_j) / T``; longer sides receive
    ``floor(range_j / epsilon) + 1`` points at the same step.
    """
    if isinstance(T, bool) or int(T) != T or T < 1:
        raise ValueError("T must be >= 1")
    T = int(T)
    ranges = box.ranges
    eps = float(np.min(ranges) / T)
    coords = []
    for lo, hi, r in zip(box.lower, box.upper, ranges):
        n = int(math.floor(r / eps + _SNAP)) + 1
        c = lo + eps * np.arange(n)
        # snap float drift at the top end onto the bound
        c = np.where(np.abs(c - hi) <= _SNAP * r, hi, c)
        c = np.minimum(c, hi)
        c.setflags(write=False)
        coords.append(c)
    mesh = np.meshgrid(*coords, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    points.setflags(write=False)
    return TypeGrid(box=box, T=T, epsilon=eps, coords=tuple(coords), points=points)


# ---------------------------------------------------------------------------
# distribution families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Beta:
    """Independent Beta(a, b) marginals on the rescaled unit coordinates."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("beta parameters must be positive")


@dataclass(frozen=True)
class TruncNormal:
    """Independent normal marginals, truncated to the box by normalization.

    ``mean``/``stddev`` default to the box midpoint and a quarter of the
    range in each dimension.
    """

    mean: tuple[float, ...] | None = None
    stddev: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mean is not None:
            object.__setattr__(self, "mean", tuple(float(x) for x in np.atleast_1d(self.mean)))
        if self.stddev is not None:
            sd = tuple(float(x) for x in np.atleast_1d(self.stddev))
            if any(not s > 0 for s in sd):
                raise ValueError("stddev must be positive")
            object.__setattr__(self, "stddev", sd)

    def parameters(self, box: Box) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = np.asarray(box.lower), np.asarray(box.upper)
        mean = (lo + hi) / 2 if self.mean is None else np.broadcast_to(self.mean, lo.shape)
        sd = (hi - lo) / 4 if self.stddev is None else np.broadcast_to(self.stddev, lo.shape)
        return np.asarray(mean, dtype=float), np.asarray(sd, dtype=float)


@dataclass(frozen=True)
class Product:
    """One one-dimensional spec per dimension."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("product needs at least one component")
        for c in self.components:
            if isinstance(c, (Product, TableDensity)):
                raise ValueError("product components must be one-dimensional families")


@dataclass(frozen=True)
class Mixture:
    """``alpha * first + (1 - alpha) * second``."""

    alpha: float
    first: "DistributionSpec"
    second: "DistributionSpec"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("mixture weight must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class TableDensity:
    """Explicit nonnegative weight per grid point.

    ``values`` has the grid's shape (or is flat in row-major order together
    with ``shape``).  This is the only way to express correlated types.
    """

    values: np.ndarray
    shape: tuple[int, ...] | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        shape = tuple(self.shape) if self.shape is not None else v.shape
        v = v.reshape(shape)
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise ValueError("table density values must be finite and nonnegative")
        if not np.any(v > 0):
            raise ValueError("table density is identically zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "shape", shape)


DistributionSpec = Union[Uniform, Beta, TruncNormal, Product, Mixture, TableDensity]


def _sub_box(box: Box, d: int) -> Box:
    return Box((box.lower[d],), (box.upper[d],))


def density_values(spec: DistributionSpec, points, box: Box) -> np.ndarray:
    """Unnormalized density at each row of ``points`` (vectorized)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != box.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, box has {box.dim}")
    if isinstance(spec, Uniform):
        return np.ones(len(pts))
    if isinstance(spec, Beta):
        x = np.clip(box.rescale(pts), 0.0, 1.0)
        return np.prod(stats.beta.pdf(x, spec.a, spec.b), axis=1)
    if isinstance(spec, TruncNormal):
        mean, sd = spec.parameters(box)
        return np.prod(stats.norm.pdf(pts, loc=mean, scale=sd), axis=1)
    if isinstance(spec, Product):
        if len(spec.components) != box.dim:
            raise ValueError(f"product has {len(spec.components)} components, box has dimension {box.dim}")
        out = np.ones(len(pts))
        for d, comp in enumerate(spec.components):
            out = out * density_values(comp, pts[:, [d]], _sub_box(box, d))
        return out
    if isinstance(spec, Mixture):
        if spec.alpha == 1.0:
            return density_values(spec.first, pts, box)
        if spec.alpha == 0.0:
            return density_values(spec.second, pts, box)
        return spec.alpha * density_values(spec.first, pts, box) + (1 - spec.alpha) * density_values(
            spec.second, pts, box
        )
    if isinstance(spec, TableDensity):
        if len(spec.shape) != box.dim:
            raise ValueError("table shape does not match box dimension")
        T = min(spec.shape) - 1
        if T < 1:
            raise ValueError("table needs at least two points per dimension")
        eps = float(np.min(box.ranges)) / T
        steps = (pts - np.asarray(box.lower)) / eps
        k = np.rint(steps).astype(int)
        if np.any(np.abs(steps - k) > 1e-6) or np.any(k < 0) or np.any(k >= np.asarray(spec.shape)):
            raise ValueError("table density evaluated off its grid")
        return spec.values[tuple(k.T)]
    raise TypeError(f"unknown distribution spec {spec!r}")


def eval_density(spec: DistributionSpec, point: Sequence[float], box: Box) -> float:
    """Unnormalized continuous density of ``spec`` at a single in-box point."""
    if not box.contains(point):
        raise ValueError(f"point {tuple(point)} lies outside the box")
    return float(density_values(spec, [point], box)[0])


@dataclass(frozen=True, eq=False)
class DiscreteDensity:
    grid: TypeGrid
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (self.grid.size,):
            raise ValueError("one mass value per grid point required")
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-12:
            raise ValueError("mass must be nonnegative and sum to one")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def __getitem__(self, index):
        return self.mass[index]


def discretize_density(spec: DistributionSpec, grid: TypeGrid) -> DiscreteDensity:
    """Normalize the density of ``spec`` over the grid points."""
    vals = density_values(spec, grid.points, grid.box)
    if np.any(~np.isfinite(vals)):
        raise ValueError("density is not finite on the grid (e.g. beta with a<1 or b<1 at a boundary)")
    total = math.fsum(vals)
    if not total > 0:
        raise ValueError("density vanishes on every grid point; cannot normalize")
    mass = vals / total
    # one renormalization pass keeps the sum within 1e-12 after rounding
    mass = mass / math.fsum(mass)
    return DiscreteDensity(grid=grid, mass=mass)
