"""
Band diagrams
=============

Free space against a square array of dielectric rods, both for TM waves.
The free-space bands touch everywhere on the path, so every gap-midgap ratio
is non-positive; the rods open a gap between bands 1 and 2.
"""

# %%
# Setup
# -----

from pathlib import Path

import numpy as np

from phcgap import DielectricDesign, band_diagram, build_grid, build_k_path, build_symmetry_map
from phcgap.io import bands_svg, design_svg
from phcgap.optimizer import initial_config

out = Path("demo-out/bands")
out.mkdir(parents=True, exist_ok=True)

grid = build_grid(32)
sym = build_symmetry_map(grid)
kpath = build_k_path(12)
print(f"{grid.n_cells} cells, {sym.n_eps} design variables, {kpath.n_k} k-points")

# %%
# Free space
# ----------
# Every band is |k + G|^2 for a reciprocal vector G, so we can check the
# finite element values directly.

vacuum = DielectricDesign(np.ones(sym.n_eps), sym)
free = band_diagram(vacuum, kpath, "TM", 10)
for m in (1, 2, 3):
    lo, hi, J = free.edges(m)
    print(f"free space, gap above band {m}: J = {J:+.4f}")

# %%
# Rods in air
# -----------

rods = initial_config("rods", 0, sym, (1.0, 11.4), radius=0.38)
bands = band_diagram(rods, kpath, "TM", 8, m=1)
print(f"rods: lambda_l = {bands.lambda_lower:.4f}, lambda_u = {bands.lambda_upper:.4f}, "
      f"J = {bands.gap_midgap:.4f}")

bands_svg(bands, out / "rods_bands.svg")
design_svg(rods, out / "rods_design.svg")
print("wrote", sorted(p.name for p in out.iterdir()))
