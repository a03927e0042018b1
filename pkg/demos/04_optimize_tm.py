"""
Optimizing a TM gap
===================

Random starts for the gap above band 1 at desk scale.  Some starts stall in
a poor local optimum, which is why restarts are part of the workflow.
"""

import logging

from phcgap import RunConfig, multi_restart
from phcgap.io import bands_svg, design_svg

logging.basicConfig(level=logging.WARNING)

cfg = RunConfig(n=16, polarization="TM", m=1, init_kind="uniform-random", seed=0, max_outer=30)
best, runs = multi_restart(cfg, restarts=4)

for r in runs:
    print(f"seed {r.config.seed}: {r.termination:<10} {len(r.history):>2} iterations, "
          f"J {r.initial_gap:+.4f} -> {r.final_gap:+.4f}")

print("\nbest run, iteration by iteration")
for h in best.history:
    print(f"  {h.iteration:>2}  J={h.gap_midgap:+.5f}  step={h.step:.2e}  max b_k={max(h.b)}")

design_svg(best.final_design, "tm1_design.svg")
bands_svg(best.final_bands, "tm1_bands.svg")
