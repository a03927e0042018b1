"""
Large-grid recipe
=================

The 64 x 64 setting with 528 design variables, the gap between TM bands 7
and 8, and several random starts.  Each start takes a few minutes on one core
(shift-invert eigensolves, one SDP with ~530 variables per iteration), so
this script is a long-running job rather than a quick demo.

    python3 demos/05_large_grid_recipe.py 8
"""

import sys

from phcgap import RunConfig, multi_restart
from phcgap.io import bands_svg, design_svg, write_design_csv

restarts = int(sys.argv[1]) if len(sys.argv) > 1 else 8
cfg = RunConfig(
    n=64,
    polarization="TM",
    m=7,
    init_kind="uniform-random",
    seed=0,
    max_outer=30,
    eig_method="sparse",
)
best, runs = multi_restart(cfg, restarts)
for r in runs:
    print(f"seed {r.config.seed}: J {r.initial_gap:+.4f} -> {r.final_gap:+.4f} ({r.termination})")
print(f"best J = {best.final_gap:.4f}")

write_design_csv(best.final_design, "tm78_design.csv")
design_svg(best.final_design, "tm78_design.svg", cell_px=4)
bands_svg(best.final_bands, "tm78_bands.svg")
