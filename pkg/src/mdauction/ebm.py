"""Exclusive buyer mechanisms and the one-dimensional Myerson benchmark.

In an exclusive buyer mechanism the seller posts a price per quality grade.
Every buyer's bid is her best surplus under the menu,
``beta = max_j (v_j - p_j)``.  The highest bidder wins the exclusive right to
buy if ``beta >= 0`` and takes the grade attaining her ``beta``.

Two payment rules are available.  ``"beta"`` (the default) is a second-price
auction in ``beta``: the winner of grade ``j`` pays ``p_j`` plus the
runner-up's nonnegative part of ``beta``.  ``"literal"`` charges
``max(p_j, highest competing value for grade j)`` and lets the winner pick the
grade with the best surplus at those prices.  With one grade both rules are a
second-price auction with reserve ``p_1``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from .lpmodel import AuctionSetting
from .typespace import Beta, Box, DistributionSpec, TruncNormal, Uniform

__all__ = [
    "PriceMenu",
    "EbmOutcome",
    "RULES",
    "MAX_ENUMERATION",
    "ebm_revenue_exact",
    "ebm_revenue_closed_form",
    "ebm_revenue_mc",
    "optimize_ebm",
    "price_candidates",
    "myerson_oracle",
    "myerson_reserve",
]

MAX_ENUMERATION = 10**7
RULES = ("beta", "literal")
TIE_TOL = 1e-12
_CHUNK = 1 << 17


@dataclass(frozen=True)
class PriceMenu:
    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if not all(math.isfinite(x) for x in p):
            raise ValueError("prices must be finite")
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.p)


@dataclass(frozen=True)
class EbmOutcome:
    """Expected seller outcome per auction (summed over buyers).

    ``revenue`` is net of production costs, so it is comparable with the
    optimal-auction total revenue; ``gross_revenue`` is the expected payment.
    """

    revenue: float
    sale_probability: float
    shares: tuple[float, ...]
    gross_revenue: float
    stderr: float = 0.0


def _check(setting: AuctionSetting, menu: PriceMenu, rule: str) -> None:
    if len(menu) != setting.J:
        raise ValueError(f"menu has {len(menu)} prices for {setting.J} grades")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")


def _bids(points: np.ndarray, p: np.ndarray):
    """Per-type bid ``beta`` and the grade attaining it (lowest index on ties)."""
    surplus = points - p
    grade = np.argmax(surplus, axis=1)
    return surplus[np.arange(len(points)), grade], grade


def _play_beta(idx: np.ndarray, beta: np.ndarray, grade: np.ndarray, p: np.ndarray, costs: np.ndarray):
    m, N = idx.shape
    b = beta[idx]
    winner = np.argmax(b, axis=1)  # first maximum, i.e. lowest buyer index
    rows = np.arange(m)
    bw = b[rows, winner]
    if N > 1:
        b[rows, winner] = -np.inf
        runner = np.maximum(b.max(axis=1), 0.0)
    else:
        runner = np.zeros(m)
    g = grade[idx[rows, winner]]
    sold = bw >= 0
    pay = np.where(sold, p[g] + runner, 0.0)
    profit = np.where(sold, pay - costs[g], 0.0)
    return np.where(sold, g, -1), pay, profit


def _play_literal(V: np.ndarray, p: np.ndarray, costs: np.ndarray):
    m, N, J = V.shape
    beta = np.max(V - p, axis=2)
    winner = np.argmax(beta, axis=1)
    rows = np.arange(m)
    vw = V[rows, winner]
    if N > 1:
        others = V.copy()
        others[rows, winner] = -np.inf
        price = np.maximum(p, others.max(axis=1))
    else:
        price = np.broadcast_to(p, (m, J))
    surplus = vw - price
    grade = np.argmax(surplus, axis=1)
    best = surplus[rows, grade]
    sold = (beta[rows, winner] >= 0) & (best >= 0)
    pay = np.where(sold, price[rows, grade], 0.0)
    profit = np.where(sold, pay - costs[grade], 0.0)
    return np.where(sold, grade, -1), pay, profit


def _play(setting: AuctionSetting, idx: np.ndarray, p: np.ndarray, rule: str):
    """Grade sold (or -1), payment and profit for a batch of type profiles.

    ``idx`` holds grid indices with shape (m, N).
    """
    costs = np.asarray(setting.costs, dtype=float)
    if rule == "beta":
        beta, grade = _bids(setting.grid.points, p)
        return _play_beta(idx, beta, grade, p, costs)
    return _play_literal(setting.grid.points[idx], p, costs)


def ebm_revenue_exact(setting: AuctionSetting, menu: PriceMenu, rule: str = "beta") -> EbmOutcome:
    """Expected outcome by enumerating every profile of grid types."""
    _check(setting, menu, rule)
    n, N, J = setting.n, setting.N, setting.J
    total = n**N
    if total > MAX_ENUMERATION:
        raise ValueError(f"{n}^{N} = {total} profiles exceed the enumeration limit {MAX_ENUMERATION}")
    f = setting.f
    p = np.asarray(menu.p)
    acc = np.zeros(2 + J)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.stack(np.unravel_index(flat, (n,) * N), axis=1)
        w = np.prod(f[idx], axis=1)
        grade, pay, profit = _play(setting, idx, p, rule)
        acc[0] += np.dot(w, profit)
        acc[1] += np.dot(w, pay)
        for j in range(J):
            acc[2 + j] += w[grade == j].sum()
    shares = tuple(float(x) for x in acc[2:])
    return EbmOutcome(float(acc[0]), float(sum(shares)), shares, float(acc[1]))


def ebm_revenue_closed_form(setting: AuctionSetting, menu: PriceMenu) -> EbmOutcome:
    """Exact expected outcome of the ``"beta"`` rule for any number of buyers.

    Bids are i.i.d. draws from a discrete law, so the winner's bid level and
    the runner-up bid follow from order statistics of that law.  Given the
    winning level, the winner's type is distributed like any type at that
    level, which fixes the grade sold.
    """
    _check(setting, menu, "beta")
    N, J = setting.N, setting.J
    f = setting.f
    p = np.asarray(menu.p)
    costs = np.asarray(setting.costs, dtype=float)
    beta, grade = _bids(setting.grid.points, p)
    keep = f > 0
    beta, grade, f = beta[keep], grade[keep], f[keep]
    levels, inv = np.unique(beta, return_inverse=True)
    mass = np.bincount(inv, weights=f, minlength=len(levels))
    G = np.minimum(np.cumsum(mass), 1.0)
    G_below = np.concatenate(([0.0], G[:-1]))
    p_top = G**N - G_below**N  # P(highest bid = level)
    share = np.zeros((len(levels), J))
    np.add.at(share, (inv, grade), f)
    share /= mass[:, None]
    win = levels >= 0
    shares = (p_top[win, None] * share[win]).sum(axis=0)
    # runner-up bid: P(second <= level) = G^N + N G^(N-1) (1 - G)
    if N > 1:
        H = G**N + N * G ** (N - 1) * (1.0 - G)
        H_below = G_below**N + N * G_below ** (N - 1) * (1.0 - G_below)
        second = float(np.dot(np.maximum(levels, 0.0), H - H_below))
    else:
        second = 0.0
    gross = float(np.dot(shares, p)) + second
    net = gross - float(np.dot(shares, costs))
    return EbmOutcome(net, float(shares.sum()), tuple(float(x) for x in shares), gross)


def _draw(setting: AuctionSetting, samples: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.choice(setting.n, size=(samples, setting.N), p=setting.f)


def _mc_from_draws(setting: AuctionSetting, menu: PriceMenu, idx: np.ndarray, rule: str) -> EbmOutcome:
    p = np.asarray(menu.p)
    parts = [_play(setting, idx[s:s + _CHUNK], p, rule) for s in range(0, len(idx), _CHUNK)]
    grade = np.concatenate([g for g, _, _ in parts])
    pay = np.concatenate([x for _, x, _ in parts])
    profit = np.concatenate([x for _, _, x in parts])
    S = len(idx)
    shares = tuple(float(np.count_nonzero(grade == j) / S) for j in range(setting.J))
    stderr = float(profit.std(ddof=1) / math.sqrt(S)) if S > 1 else math.inf
    return EbmOutcome(float(profit.mean()), float(sum(shares)), shares, float(pay.mean()), stderr)


def ebm_revenue_mc(setting: AuctionSetting, menu: PriceMenu, samples: int, seed=0, rule: str = "beta") -> EbmOutcome:
    """Monte Carlo estimate from ``samples`` i.i.d. profiles drawn from the grid density."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check(setting, menu, rule)
    return _mc_from_draws(setting, menu, _draw(setting, samples, seed), rule)


def price_candidates(box: Box, resolution: int) -> list[np.ndarray]:
    """Per-grade candidate prices: an even grid over the range plus an
    exclusion sentinel one unit above the top valuation."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    out = []
    for lo, hi in zip(box.lower, box.upper):
        grid = lo + (hi - lo) / resolution * np.arange(resolution + 1)
        grid[-1] = hi
        out.append(np.append(grid, hi + 1.0))
    return out


def optimize_ebm(
    setting: AuctionSetting,
    resolution: int | None = None,
    samples: int = 200_000,
    seed=0,
    rule: str = "beta",
) -> tuple[PriceMenu, EbmOutcome]:
    """Best menu by exhaustive search over :func:`price_candidates`.

    Menus are scored exactly: in closed form under the ``"beta"`` rule, by
    enumeration under ``"literal"`` while the profile count allows, and
    otherwise by Monte Carlo on one common sample.  Ties go to the
    lexicographically smallest menu, where revenues within a relative
    ``TIE_TOL`` of each other count as equal.
    """
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    resolution = setting.grid.T if resolution is None else resolution
    cands = price_candidates(setting.grid.box, resolution)
    if rule == "beta":
        score = lambda m: ebm_revenue_closed_form(setting, m)
    elif setting.n**setting.N <= MAX_ENUMERATION:
        score = lambda m: ebm_revenue_exact(setting, m, rule)
    else:
        draws = _draw(setting, samples, seed)
        score = lambda m: _mc_from_draws(setting, m, draws, rule)
    best = None
    for combo in itertools.product(*cands):  # lexicographic order
        menu = PriceMenu(combo)
        out = score(menu)
        # revenues equal up to rounding count as ties, which keep the earlier menu
        if best is None or out.revenue > best[1].revenue + TIE_TOL * max(1.0, abs(best[1].revenue)):
            best = (menu, out)
    return best


# -- one-dimensional benchmark ----------------------------------------------

def _marginal(spec: DistributionSpec, a: float, b: float):
    if isinstance(spec, Uniform):
        return stats.uniform(loc=a, scale=b - a)
    if isinstance(spec, Beta):
        return stats.beta(spec.a, spec.b, loc=a, scale=b - a)
    if isinstance(spec, TruncNormal):
        mean, sd = spec.parameters(Box((a,), (b,)))
        lo, hi = (a - mean[0]) / sd[0], (b - mean[0]) / sd[0]
        return stats.truncnorm(lo, hi, loc=mean[0], scale=sd[0])
    raise TypeError(f"no closed-form marginal for {spec!r}")


def myerson_reserve(spec: DistributionSpec, a: float, b: float, cost: float = 0.0) -> float:
    """Reserve price solving ``v - (1 - F(v)) / f(v) = cost`` (clamped to [a, b])."""
    dist = _marginal(spec, a, b)

    def psi(v):
        return v - dist.sf(v) / dist.pdf(v)

    # regularity check on an interior grid; the top endpoint has psi = b
    vs = np.linspace(a, b, 2001)[1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.array([psi(v) for v in vs])
    finite = vals[np.isfinite(vals)]
    if np.any(np.diff(finite) < -1e-9):
        raise ValueError("virtual value is not monotone; distribution is not regular")
    if psi(a + 1e-12 * (b - a)) >= cost:
        return a
    if b <= cost:
        return b
    return optimize.brentq(lambda v: psi(v) - cost, a + 1e-12 * (b - a), b - 1e-12 * (b - a), xtol=1e-14)


def myerson_oracle(N: int, spec: DistributionSpec, a: float, b: float, cost: float = 0.0) -> float:
    """Optimal expected profit for ``N`` i.i.d. buyers with a single grade.

    The optimal auction is a second-price auction with the Myerson reserve
    ``r``; its expected price is ``r * P(max >= r) + E[(second - r)^+]`` and
    the tail term is integrated numerically.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    dist = _marginal(spec, a, b)
    r = myerson_reserve(spec, a, b, cost)
    F = dist.cdf
    p_sale = 1.0 - F(r) ** N

    def second_above(x):
        Fx = F(x)
        return 1.0 - Fx**N - N * Fx ** (N - 1) * (1.0 - Fx)

    tail = integrate.quad(second_above, r, b, epsabs=1e-13, epsrel=1e-12)[0] if N > 1 else 0.0
    return float(r * p_sale + tail - cost * p_sale)
