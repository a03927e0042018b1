"""Band-gap optimization of 2D square-lattice photonic crystals.

Bloch-periodic bilinear finite elements on a D4-symmetric design grid, band
diagrams along Gamma-X-M-Gamma, and an outer iteration that freezes a few
eigenvectors per k and solves a linear-fractional SDP for the next design.
"""
from .assembly import AffineOperatorFamily, assemble, assemble_family, element_matrices, evaluate
from .bands import BandSolution, band_diagram, gap_midgap, normalized_frequency
from .config import ConfigError, parse_config
from .eig import EigenSolution, NumericalError, solve_gevp
from .lattice import (
    DielectricDesign,
    Grid,
    KPath,
    SymmetryMap,
    build_grid,
    build_k_path,
    build_symmetry_map,
    expand_design,
    restrict_design,
)
from .optimizer import RunConfig, RunResult, initial_config, multi_restart, optimize
from .sdp import build_fractional, charnes_cooper, recover, solve_sdp
from .subspace import build_reduced_subspace, embed_real, reduce_blocks, select_dims

__version__ = "0.1.0"
