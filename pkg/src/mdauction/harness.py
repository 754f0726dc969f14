"""Experiment configs, runs and result artifacts.

Config files are flat ``key = value`` text with ``#`` comments::

    name = setting1
    N = 2
    lower = 2, 2
    upper = 3, 3
    costs = 0, 0
    T = 20
    dist.kind = uniform

Distribution sub-specs use dotted keys: ``dist.kind`` is one of ``uniform``,
``beta`` (``dist.a``, ``dist.b``), ``truncnormal`` (``dist.mean``,
``dist.stddev``), ``product`` (``dist.d1.kind``, ``dist.d2.kind``, ...),
``mixture`` (``dist.alpha``, ``dist.first.*``, ``dist.second.*``) or
``table`` (``dist.values``, row-major over the grid).
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .backend import IterationLimit
from .ebm import RULES, PriceMenu, optimize_ebm
from .lpmodel import AuctionSetting
from .solver import MechanismSolution, SolverConfig, exclusion_region, solve_optimal_auction
from .typespace import (
    Beta,
    Box,
    DistributionSpec,
    Mixture,
    Product,
    TableDensity,
    TruncNormal,
    TypeGrid,
    Uniform,
    build_grid,
    discretize_density,
)

__all__ = [
    "ConfigError",
    "ExperimentError",
    "ExperimentConfig",
    "RunResult",
    "RunReport",
    "parse_config",
    "load_config",
    "shipped_configs",
    "describe_spec",
    "build_setting",
    "run_experiment",
    "emit_heatmap",
    "heatmap_text",
    "solution_csv",
    "masks_fuzzy_equal",
    "is_lower_left_rectangle",
]

logger = logging.getLogger(__name__)

CSV_DIGITS = "%.12g"


class ExperimentError(RuntimeError):
    """A solve or EBM search failed; names the setting and buyer count."""

    def __init__(self, setting: str, N: int, cause: BaseException):
        self.setting, self.N, self.cause = setting, N, cause
        super().__init__(f"{setting}, N={N}: {type(cause).__name__}: {cause}")


class ConfigError(ValueError):
    def __init__(self, message, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ExperimentConfig:
    name: str
    N_list: tuple[int, ...]
    box: Box
    costs: tuple[float, ...]
    dist: DistributionSpec
    T: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    ebm_resolution: int | None = None
    ebm_samples: int = 200_000
    ebm_rule: str = "beta"
    seed: int = 0
    out: str | None = None

    @property
    def J(self) -> int:
        return self.box.dim

    @property
    def tau(self) -> float:
        return self.solver.tau


# -- parsing ------------------------------------------------------------------

def _num(text: str) -> float:
    """A real number; simple fractions such as ``1/3`` are accepted."""
    text = text.strip()
    value = float(Fraction(text)) if "/" in text else float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text} is not finite")
    return value


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_num(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for x in text.replace(",", " ").split():
        v = _num(x)
        if v != int(v):
            raise ValueError(f"{x} is not an integer")
        out.append(int(v))
    return tuple(out)


_SOLVER_KEYS = {
    "solver.violation_tol": _num,
    "solver.lp_tol": _num,
    "solver.inactive_slack": _num,
    "solver.inactive_age": int,
    "solver.max_outer": int,
    "solver.max_inner": int,
    "solver.max_border_cuts": int,
}
_TOP_KEYS = {"alpha", "name", "N", "J", "lower", "upper", "costs", "T", "tau", "seed", "out",
             "ebm.resolution", "ebm.samples", "ebm.rule"}


class _Keys:
    """Raw key/value pairs with line numbers and consumption tracking."""

    def __init__(self, items: dict[str, tuple[str, int]]):
        self.items = items
        self.used: set[str] = set()

    def has(self, key):
        return key in self.items

    def get(self, key, conv=str, default=None, required=False):
        if key not in self.items:
            if required:
                raise ConfigError(f"missing required key '{key}'")
            return default
        self.used.add(key)
        text, line = self.items[key]
        try:
            return conv(text)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad value for '{key}': {e}", line) from None

    def line(self, key):
        return self.items.get(key, (None, None))[1]


def _parse_dist(keys: _Keys, prefix: str, dim: int) -> DistributionSpec:
    kind = keys.get(f"{prefix}.kind", str, required=True).strip().lower()
    line = keys.line(f"{prefix}.kind")
    try:
        if kind == "uniform":
            return Uniform()
        if kind == "beta":
            return Beta(keys.get(f"{prefix}.a", _num, required=True), keys.get(f"{prefix}.b", _num, required=True))
        if kind in ("truncnormal", "truncated_normal", "normal"):
            mean = keys.get(f"{prefix}.mean", _floats)
            sd = keys.get(f"{prefix}.stddev", _floats)
            for vec, label in ((mean, "mean"), (sd, "stddev")):
                if vec is not None and len(vec) not in (1, dim):
                    raise ConfigError(f"{prefix}.{label} needs 1 or {dim} values", keys.line(f"{prefix}.{label}"))
            return TruncNormal(mean, sd)
        if kind == "product":
            comps = []
            for d in range(1, dim + 1):
                comp = _parse_dist(keys, f"{prefix}.d{d}", 1)
                if isinstance(comp, (Product, TableDensity)):
                    raise ConfigError(f"{prefix}.d{d} must be one-dimensional", keys.line(f"{prefix}.d{d}.kind"))
                comps.append(comp)
            return Product(tuple(comps))
        if kind == "mixture":
            alpha = keys.get(f"{prefix}.alpha", _num, required=True)
            first = _parse_dist(keys, f"{prefix}.first", dim)
            second = _parse_dist(keys, f"{prefix}.second", dim)
            return Mixture(alpha, first, second)
        if kind == "table":
            return keys.get(f"{prefix}.values", lambda t: np.array(_floats(t)), required=True)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e), line) from None
    raise ConfigError(f"unknown distribution kind '{kind}'", line)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a ``key = value`` experiment config."""
    items: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno)
        if key in items:
            raise ConfigError(f"duplicate key '{key}'", lineno)
        items[key] = (value, lineno)
    if "alpha" in items:
        if "dist.alpha" in items:
            raise ConfigError("give either 'alpha' or 'dist.alpha', not both", items["alpha"][1])
        items["dist.alpha"] = items.pop("alpha")
    keys = _Keys(items)
    for key, (_, lineno) in items.items():
        if key not in _TOP_KEYS and key not in _SOLVER_KEYS and not key.startswith("dist."):
            raise ConfigError(f"unknown key '{key}'", lineno)

    name = keys.get("name", str, default="experiment")
    N_list = keys.get("N", _ints, required=True)
    if not N_list:
        raise ConfigError("N list is empty", keys.line("N"))
    if any(n < 1 for n in N_list):
        raise ConfigError("every N must be >= 1", keys.line("N"))
    lower = keys.get("lower", _floats, required=True)
    upper = keys.get("upper", _floats, required=True)
    if len(lower) != len(upper):
        raise ConfigError("lower and upper have different lengths", keys.line("upper"))
    J = keys.get("J", int, default=len(lower))
    if J < 1 or J != len(lower):
        raise ConfigError(f"J = {J} does not match the {len(lower)} bounds given", keys.line("J"))
    try:
        box = Box(lower, upper)
    except ValueError as e:
        raise ConfigError(str(e), keys.line("upper")) from None
    costs = keys.get("costs", _floats, default=(0.0,) * J)
    if len(costs) != J:
        raise ConfigError(f"costs has {len(costs)} entries, expected J = {J}", keys.line("costs"))
    if any(c < 0 for c in costs):
        raise ConfigError("costs must be nonnegative", keys.line("costs"))
    T = keys.get("T", _ints, required=True)
    if len(T) != 1 or T[0] < 1:
        raise ConfigError("T must be >= 1", keys.line("T"))
    T = T[0]

    solver_kw = {}
    for key, conv in _SOLVER_KEYS.items():
        if keys.has(key):
            solver_kw[key.split(".", 1)[1]] = keys.get(key, conv)
    if keys.has("tau"):
        solver_kw["tau"] = keys.get("tau", _num)
    try:
        solver = SolverConfig(**solver_kw)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    dist = _parse_dist(keys, "dist", J)
    if isinstance(dist, np.ndarray):
        grid = build_grid(box, T)
        if dist.size != grid.size:
            raise ConfigError(f"dist.values has {dist.size} entries, grid has {grid.size}", keys.line("dist.values"))
        try:
            dist = TableDensity(dist, grid.shape)
        except ValueError as e:
            raise ConfigError(str(e), keys.line("dist.values")) from None

    resolution = keys.get("ebm.resolution", int)
    if resolution is not None and resolution < 1:
        raise ConfigError("ebm.resolution must be >= 1", keys.line("ebm.resolution"))
    samples = keys.get("ebm.samples", int, default=200_000)
    if samples < 1:
        raise ConfigError("ebm.samples must be >= 1", keys.line("ebm.samples"))
    rule = keys.get("ebm.rule", str, default="beta").strip().lower()
    if rule not in RULES:
        raise ConfigError(f"ebm.rule must be one of {', '.join(RULES)}", keys.line("ebm.rule"))
    seed = keys.get("seed", int, default=0)
    out = keys.get("out", str)

    unused = set(items) - keys.used
    if unused:
        key = min(unused, key=lambda k: items[k][1])
        raise ConfigError(f"key '{key}' does not apply to this configuration", items[key][1])
    return ExperimentConfig(name, tuple(N_list), box, costs, dist, T, solver, resolution, samples, rule, seed, out)


def shipped_configs() -> list[str]:
    """Names of the configs bundled with the package."""
    files = resources.files("mdauction") / "configs"
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def load_config(name_or_path: str | os.PathLike) -> ExperimentConfig:
    """Load a config file, or a bundled config by name (e.g. ``"setting1"``)."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config(path.read_text())
    bundled = resources.files("mdauction") / "configs" / f"{name_or_path}.cfg"
    if bundled.is_file():
        return parse_config(bundled.read_text())
    raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")


def describe_spec(spec: DistributionSpec, box: Box | None = None) -> str:
    """Compact, self-describing text for a distribution (defaults resolved)."""
    if isinstance(spec, Uniform):
        return "uniform"
    if isinstance(spec, Beta):
        return f"beta(a={spec.a:g},b={spec.b:g})"
    if isinstance(spec, TruncNormal):
        if box is None:
            return "truncnormal"
        mean, sd = spec.parameters(box)
        return "truncnormal(mean=[{}],stddev=[{}])".format(
            " ".join(f"{x:g}" for x in mean), " ".join(f"{x:g}" for x in sd))
    if isinstance(spec, Product):
        parts = [describe_spec(c, None if box is None else Box((box.lower[d],), (box.upper[d],)))
                 for d, c in enumerate(spec.components)]
        return "product(" + " x ".join(parts) + ")"
    if isinstance(spec, Mixture):
        return f"mixture(alpha={spec.alpha:g}; {describe_spec(spec.first, box)}; {describe_spec(spec.second, box)})"
    if isinstance(spec, TableDensity):
        return "table"
    return repr(spec)


def build_setting(config: ExperimentConfig, N: int) -> AuctionSetting:
    grid = build_grid(config.box, config.T)
    return AuctionSetting(N, config.costs, grid, discretize_density(config.dist, grid))


# -- artifacts ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return CSV_DIGITS % (float(x) + 0.0)


def _full(x: float) -> str:
    """Round-trip precision, so derived fields can be recomputed exactly."""
    return repr(float(x) + 0.0)


def heatmap_text(values, grid_shape: tuple[int, int]) -> str:
    """ASCII PGM of per-point values in [0, 1] (clamped) on a 2-D grid.

    Column index is the first coordinate, and the top row is the highest
    second coordinate.
    """
    if len(grid_shape) != 2:
        raise ValueError("heatmaps need a two-dimensional type space")
    n1, n2 = grid_shape
    v = np.clip(np.asarray(values, dtype=float).reshape(n1, n2), 0.0, 1.0)
    pix = np.floor(255.0 * v + 0.5).astype(int)
    lines = ["P2", f"{n1} {n2}", "255"]
    for j in range(n2 - 1, -1, -1):
        lines.append(" ".join(str(p) for p in pix[:, j]))
    return "\n".join(lines) + "\n"


def emit_heatmap(values, grid: TypeGrid, path: str | os.PathLike) -> Path:
    """Write :func:`heatmap_text` for ``values`` on ``grid`` to ``path``."""
    if grid.dim != 2:
        raise ValueError("heatmaps need a two-dimensional type space (J = 2)")
    path = Path(path)
    path.write_text(heatmap_text(values, grid.shape))
    return path


def solution_csv(solution: MechanismSolution, tau: float) -> str:
    grid = solution.setting.grid
    J = grid.dim
    mask = exclusion_region(solution, tau)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"v_{j + 1}" for j in range(J)] + [f"Q_{j + 1}" for j in range(J)] + ["U", "M", "excluded"])
    for i in range(grid.size):
        w.writerow([_fmt(x) for x in grid.points[i]] + [_fmt(x) for x in solution.Q[i]]
                   + [_fmt(solution.U[i]), _fmt(solution.M[i]), int(mask[i])])
    return buf.getvalue()


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    padded = np.pad(mask, 1)
    for offset in np.ndindex(*(3,) * mask.ndim):
        sl = tuple(slice(o, o + s) for o, s in zip(offset, mask.shape))
        out |= padded[sl]
    return out


def masks_fuzzy_equal(a: np.ndarray, b: np.ndarray, shape: tuple[int, ...]) -> bool:
    """Each mask lies within one grid cell (Chebyshev) of the other."""
    a = np.asarray(a, dtype=bool).reshape(shape)
    b = np.asarray(b, dtype=bool).reshape(shape)
    return bool(np.all(a <= _dilate(b)) and np.all(b <= _dilate(a)))


def is_lower_left_rectangle(mask: np.ndarray, grid: TypeGrid) -> bool:
    """True if ``mask`` equals ``{v : v_d <= a_d for all d}`` for some corner ``a``.

    An empty mask counts as the degenerate rectangle.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return True
    corner = grid.points[mask].max(axis=0)
    rect = np.all(grid.points <= corner + 1e-12, axis=1)
    return bool(np.array_equal(rect, mask))


# -- runs -----------------------------------------------------------------------

@dataclass
class RunResult:
    N: int
    setting: AuctionSetting
    solution: MechanismSolution | None = None
    mask: np.ndarray | None = None
    ebm_menu: PriceMenu | None = None
    ebm_revenue: float | None = None
    ebm_stderr: float | None = None
    ebm_method: str | None = None
    ebm_seconds: float | None = None
    error: str | None = None

    @property
    def total_revenue(self) -> float | None:
        return None if self.solution is None else self.solution.total_revenue

    @property
    def gap(self) -> float | None:
        total = self.total_revenue
        if total is None or self.ebm_revenue is None or not total > 0:
            return None
        return (total - self.ebm_revenue) / total

    @property
    def certified(self) -> bool:
        return self.solution is not None and self.solution.certified


@dataclass
class RunReport:
    config: ExperimentConfig
    runs: list[RunResult]
    masks_identical: bool | None = None
    masks_fuzzy_identical: bool | None = None

    @property
    def ok(self) -> bool:
        return all(r.error is None and (r.solution is None or r.certified) for r in self.runs)

    def run_for(self, N: int) -> RunResult:
        for r in self.runs:
            if r.N == N:
                return r
        raise KeyError(N)

    @property
    def mask_verdict(self) -> str | None:
        if self.masks_identical is None:
            return None
        if self.masks_identical:
            if all(not r.mask.any() for r in self.runs):
                detail = "both empty" if len(self.runs) == 2 else "all empty"
            else:
                detail = "masks identical"
            return f"invariant across N: yes ({detail})"
        if self.masks_fuzzy_identical:
            return "invariant across N: no (masks differ, but only within one grid cell)"
        return "invariant across N: no (masks differ)"


def _run_one(config: ExperimentConfig, N: int, do_solve: bool, do_ebm: bool) -> RunResult:
    try:
        return _run_one_inner(config, N, do_solve, do_ebm)
    except Exception as e:
        raise ExperimentError(config.name, N, e) from e


def _run_one_inner(config: ExperimentConfig, N: int, do_solve: bool, do_ebm: bool) -> RunResult:
    setting = build_setting(config, N)
    res = RunResult(N=N, setting=setting)
    if do_solve:
        try:
            sol = solve_optimal_auction(setting, config.solver)
        except IterationLimit as e:
            if e.incumbent is None:
                res.error = str(e)
                return res
            sol = e.incumbent
            res.error = f"{e} (incumbent not certified)"
        res.solution = sol
        res.mask = exclusion_region(sol, config.tau)
    if do_ebm:
        t0 = time.perf_counter()
        menu, outcome = optimize_ebm(
            setting, config.ebm_resolution, config.ebm_samples, config.seed, rule=config.ebm_rule)
        res.ebm_menu, res.ebm_revenue, res.ebm_stderr = menu, outcome.revenue, outcome.stderr
        res.ebm_method = "montecarlo" if outcome.stderr > 0 else "exact"
        res.ebm_seconds = time.perf_counter() - t0
    return res


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | os.PathLike | None = None,
    *,
    solve: bool = True,
    ebm: bool = True,
    fmt: str = "both",
    threads: int = 1,
) -> RunReport:
    """Run every N of ``config`` and, if ``out_dir`` is given, write artifacts.

    Per N, ``<out>/N<k>/`` receives ``solution.csv``, ``Q1.pgm``, ``Q2.pgm``,
    ``exclusion.pgm``, ``report.txt`` and ``report.csv``; ``<out>/`` receives
    the cross-N ``report.txt``/``report.csv``.
    """
    if fmt not in ("csv", "pgm", "both"):
        raise ValueError("fmt must be csv, pgm or both")
    if threads > 1 and len(config.N_list) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda n: _run_one(config, n, solve, ebm), config.N_list))
    else:
        runs = [_run_one(config, n, solve, ebm) for n in config.N_list]
    report = RunReport(config, runs)
    masks = [r.mask for r in runs if r.mask is not None]
    if solve and len(masks) == len(runs) and len(runs) > 1:
        shape = runs[0].setting.grid.shape
        report.masks_identical = all(np.array_equal(masks[0], m) for m in masks[1:])
        report.masks_fuzzy_identical = all(masks_fuzzy_equal(masks[0], m, shape) for m in masks[1:])
    out_dir = out_dir if out_dir is not None else config.out
    if out_dir is not None:
        write_artifacts(report, out_dir, fmt)
    return report


def _run_rows(r: RunResult, config: ExperimentConfig) -> list[tuple[str, str]]:
    rows = [("N", str(r.N))]
    if r.solution is not None:
        sol = r.solution
        d = sol.diagnostics
        rows += [
            ("objective", _full(sol.objective)),
            ("total_revenue", _full(sol.total_revenue)),
            ("certified", str(sol.certified).lower()),
            ("excluded_points", str(int(r.mask.sum()))),
            ("excluded_mass", _full(float(r.setting.f[r.mask].sum()))),
            ("exclusion_rectangular", str(is_lower_left_rectangle(r.mask, r.setting.grid)).lower()),
        ]
        for key in ("outer_iterations", "inner_iterations", "final_level", "active_rows",
                    "cuts_added", "cuts_removed", "icc_violations", "border_violations"):
            if key in d:
                rows.append((key, str(d[key])))
    if r.ebm_menu is not None:
        rows += [(f"ebm_price_{j + 1}", _full(p)) for j, p in enumerate(r.ebm_menu.p)]
        rows += [("ebm_revenue", _full(r.ebm_revenue)), ("ebm_method", r.ebm_method)]
        if r.ebm_method == "montecarlo":
            rows.append(("ebm_stderr", _full(r.ebm_stderr)))
    if r.gap is not None:
        rows.append(("gap", _full(r.gap)))
    if r.error is not None:
        rows.append(("error", r.error))
    return rows


def _header_rows(config: ExperimentConfig) -> list[tuple[str, str]]:
    grid = build_grid(config.box, config.T)
    return [
        ("setting", config.name),
        ("J", str(config.J)),
        ("T", str(config.T)),
        ("epsilon", _fmt(grid.epsilon)),
        ("grid_points", str(grid.size)),
        ("lower", " ".join(_fmt(x) for x in config.box.lower)),
        ("upper", " ".join(_fmt(x) for x in config.box.upper)),
        ("costs", " ".join(_fmt(x) for x in config.costs)),
        ("distribution", describe_spec(config.dist, config.box)),
        ("tau", _fmt(config.tau)),
        ("ebm_rule", config.ebm_rule),
        ("violation_tol", _fmt(config.solver.violation_tol)),
    ]


def _write_csv(path: Path, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _run_text(r: RunResult, config: ExperimentConfig) -> str:
    lines = [f"N = {r.N}"]
    if r.solution is not None:
        sol = r.solution
        d = sol.diagnostics
        lines += [
            f"  optimal per-buyer profit   {sol.objective:.10f}",
            f"  optimal total revenue      {sol.total_revenue:.10f}",
            f"  certified                  {'yes' if sol.certified else 'NO'}",
            f"  excluded grid points       {int(r.mask.sum())} of {r.setting.n}",
            f"  iterations (outer/inner)   {d.get('outer_iterations')}/{d.get('inner_iterations')}",
            f"  solve time                 {d.get('wall_time', float('nan')):.2f} s",
        ]
    if r.ebm_menu is not None:
        prices = ", ".join(f"{p:g}" for p in r.ebm_menu.p)
        lines += [
            f"  best EBM menu              ({prices})",
            f"  best EBM revenue           {r.ebm_revenue:.10f} ({r.ebm_method})",
            f"  EBM search time            {r.ebm_seconds:.2f} s",
        ]
    if r.gap is not None:
        lines.append(f"  relative revenue gap       {100 * r.gap:.4f} %")
    if r.error is not None:
        lines.append(f"  ERROR: {r.error}")
    return "\n".join(lines)


def write_artifacts(report: RunReport, out_dir: str | os.PathLike, fmt: str = "both") -> Path:
    config = report.config
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _header_rows(config)
    all_rows = list(header)
    texts = []
    for r in report.runs:
        run_dir = out / f"N{r.N}"
        run_dir.mkdir(exist_ok=True)
        rows = _run_rows(r, config)
        _write_csv(run_dir / "report.csv", header + rows)
        text = _run_text(r, config)
        (run_dir / "report.txt").write_text("\n".join(f"{k}: {v}" for k, v in header) + "\n\n" + text + "\n")
        texts.append(text)
        all_rows += [(f"N{r.N}.{k}", v) for k, v in rows if k != "N"]
        if r.solution is not None:
            if fmt in ("csv", "both"):
                (run_dir / "solution.csv").write_text(solution_csv(r.solution, config.tau))
            if fmt in ("pgm", "both") and config.J == 2:
                grid = r.setting.grid
                for j in range(config.J):
                    emit_heatmap(r.solution.Q[:, j], grid, run_dir / f"Q{j + 1}.pgm")
                emit_heatmap(r.mask.astype(float), grid, run_dir / "exclusion.pgm")
    if report.masks_identical is not None:
        all_rows += [
            ("masks_identical", str(report.masks_identical).lower()),
            ("masks_fuzzy_identical", str(report.masks_fuzzy_identical).lower()),
            ("mask_verdict", report.mask_verdict),
        ]
    _write_csv(out / "report.csv", all_rows)
    summary = "\n".join(f"{k}: {v}" for k, v in header) + "\n\n" + "\n\n".join(texts) + "\n"
    if report.mask_verdict is not None:
        summary += f"\nexclusion region across N = {', '.join(map(str, config.N_list))}: {report.mask_verdict}\n"
    (out / "report.txt").write_text(summary)
    return out
