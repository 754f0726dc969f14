"""
Does the exclusion region depend on the number of buyers?
=========================================================

For each shipped unit-square setting the optimal mechanism is solved with
one, two and three buyers and the three exclusion regions are compared
point by point.  The full sweep takes a few minutes.
"""
from mdauction import load_config, run_experiment
from mdauction.harness import shipped_configs

for name in shipped_configs():
    if not name.startswith("setting3"):
        continue
    report = run_experiment(load_config(name), solve=True, ebm=False)
    sizes = ", ".join(f"N={r.N}: {int(r.mask.sum())}" for r in report.runs)
    print(f"{name:32s} {report.mask_verdict}   [{sizes}]")

###############################################################################
# ``run_experiment(config, "out/dir")`` additionally writes per-N CSV grids and
# PGM heatmaps (``exclusion.pgm`` etc.) that any image viewer opens.
