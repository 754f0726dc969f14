"""
Costly grades on [6, 8] x [9, 11]: selling to everyone
======================================================

Here grade 1 costs 0.9 and grade 2 costs 5.  Every type is worth serving,
so the exclusion region is empty for one and for two buyers.
"""
import numpy as np

from mdauction import load_config, solve_optimal_auction
from mdauction.harness import build_setting

for name in ("setting2_n1", "setting2_n2"):
    config = load_config(name)
    N = config.N_list[0]
    sol = solve_optimal_auction(build_setting(config, N))
    share_high = float(sol.setting.f @ sol.Q[:, 1]) / float(sol.setting.f @ sol.allocation)
    print(f"N={N}: revenue {sol.total_revenue:.5f}, excluded types {int(sol.exclusion_mask().sum())}, "
          f"smallest total allocation {sol.allocation.min():.4f}, high-grade share {share_high:.3f}")

###############################################################################
# With one buyer the allocation is deterministic almost everywhere: each type
# gets the grade with the larger net value, or a lottery near the boundary.

sol = solve_optimal_auction(build_setting(load_config("setting2_n1"), 1))
n1, n2 = sol.setting.grid.shape
grade = np.where(sol.Q[:, 1] > sol.Q[:, 0], "2", "1").reshape(n1, n2)
for j in range(n2 - 1, -1, -2):
    print(" ".join(grade[::2, j]))
