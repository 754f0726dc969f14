"""
Exclusive buyer mechanisms: two readings of the payment
=======================================================

The winner can pay ``p_j`` plus the runner-up's surplus bid (a second-price
auction in the bids) or ``max(p_j, best rival value for grade j)``.  With one
grade the two coincide; with two grades the second reading charges more per
sale but sells less, and its best menu earns clearly less on Setting 1.
"""
from mdauction import PriceMenu, ebm_revenue_exact, ebm_revenue_mc, load_config, optimize_ebm
from mdauction.harness import build_setting

setting = build_setting(load_config("setting1"), 2)
for rule in ("beta", "literal"):
    menu, out = optimize_ebm(setting, rule=rule)
    print(f"{rule:8s} best menu {menu.p}: revenue {out.revenue:.5f}, sale probability {out.sale_probability:.3f}")

###############################################################################
# Exact enumeration and Monte Carlo agree within sampling error.

menu = PriceMenu((2.25, 2.25))
exact = ebm_revenue_exact(setting, menu)
mc = ebm_revenue_mc(setting, menu, samples=200_000, seed=0)
print(f"exact {exact.revenue:.5f}, Monte Carlo {mc.revenue:.5f} +/- {mc.stderr:.5f}")
