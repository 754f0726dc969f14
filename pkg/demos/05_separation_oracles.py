"""
The two separation oracles
==========================

Incentive rows are generated from a local neighbourhood that grows between
outer rounds; Border rows are found by sorting types by their total
allocation and checking each prefix.  This script prints a neighbourhood and
checks the prefix rule against brute force on a tiny grid.
"""
import itertools

import numpy as np

from mdauction import AuctionSetting, Box, TableDensity, build_grid, discretize_density
from mdauction.lpmodel import border_rhs
from mdauction.separation import border_prefix_scan, local_region

grid = build_grid(Box((0, 0), (1, 1)), 6)
v = grid.index_of((4 / 6, 3 / 6))
for L in (1, 2, 3):
    region = set(local_region(v, L, grid).tolist())
    n1, n2 = grid.shape
    print(f"L={L}: {len(region)} points")
    for j in range(n2 - 1, -1, -1):
        row = [n2 * i + j for i in range(n1)]
        print("  " + "".join("o" if k == v else "x" if k in region else "." for k in row))

###############################################################################
# Border inequalities: the worst violated subset can always be taken to be a
# prefix of the types sorted by allocation.

rng = np.random.default_rng(1)
tiny = build_grid(Box((0,), (1,)), 6)
setting = AuctionSetting(2, (0.0,), tiny, discretize_density(TableDensity(rng.uniform(0.2, 1, 7), (7,)), tiny))
Q = rng.uniform(0, 1, size=(7, 1))
order, excess = border_prefix_scan(Q, setting)
worst = max(
    (setting.N * float(setting.f[list(A)] @ Q[list(A), 0]) - border_rhs(setting, A), A)
    for k in range(1, 8) for A in itertools.combinations(range(7), k)
)
print("prefix excesses:", np.round(excess, 4))
print(f"worst over all {2**7 - 1} subsets: {worst[0]:.4f} at {worst[1]}; best prefix {excess.max():.4f}")
