"""
One outer step by hand
======================

Freeze a few eigenvectors at the incumbent, project the affine terms onto
them, and solve the resulting linear-fractional SDP after homogenization.
This is what ``phcgap.optimize`` repeats until the design stops moving.
"""

import numpy as np

from phcgap import (
    band_diagram,
    build_fractional,
    build_grid,
    build_k_path,
    build_reduced_subspace,
    build_symmetry_map,
    charnes_cooper,
    recover,
    reduce_blocks,
    solve_sdp,
)
from phcgap.assembly import assemble_family
from phcgap.optimizer import initial_config
from phcgap.sdp import decision_vector

pol, m = "TM", 1
grid = build_grid(16)
sym = build_symmetry_map(grid)
kpath = build_k_path(12)
families = [assemble_family(grid, sym, k, pol) for k in kpath.points]

design = initial_config("uniform-random", 2, sym, (1.0, 11.4))
bands = band_diagram(design, kpath, pol, m + 6, m=m, families=families)
print(f"incumbent J = {bands.gap_midgap:+.4f}")

# %%
# Subspace sizes follow the 10% windows below band m and above band m+1
sub = build_reduced_subspace(bands, m, 0.1, 0.1, design)
print("a_k:", sub.a)
print("b_k:", sub.b)

blocks = reduce_blocks(families, sub)
x_hat = decision_vector(design, sub.lambda_lower, sub.lambda_upper, pol)
fsdp = build_fractional(blocks, pol, (1.0, 11.4), floor=1e-6 * x_hat[-2:].min())
print(f"{len(fsdp.lmis)} LMIs, {fsdp.n_var} variables, incumbent feasible: {fsdp.is_feasible(x_hat)}")

# %%
# Homogenize, solve, map back
sol = solve_sdp(charnes_cooper(fsdp))
rec = recover(sol, fsdp)
print(f"SDP status {sol.status}, surrogate J = {sol.objective:+.4f}")

after = band_diagram(design.with_eps(rec.eps), kpath, pol, m + 6, m=m, families=families)
print(f"true J at the new design = {after.gap_midgap:+.4f}")
print(f"cells at eps_max: {np.mean(rec.eps == 11.4):.0%} of design variables")
