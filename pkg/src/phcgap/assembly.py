"""Bloch-periodic bilinear finite elements in affine form over the design.

Both polarizations use the shifted gradient ``(grad + i k)`` acting on periodic
functions of the unit cell:

* TE: ``A(eps, k) = sum_i (1/eps_i) A_i(k)`` with a fixed mass ``M``;
* TM: ``A(k)`` fixed and ``M(eps) = sum_i eps_i M_i``.

``A_i`` and ``M_i`` collect the element contributions of the cells in orbit ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import DielectricDesign, Grid, SymmetryMap

POLARIZATIONS = ("TE", "TM")

# Tensor two-point rules on [-1, 1] with unit weights for the mass matrix.
# "consistent" is 2x2 Gauss (exact).  "blended" puts the points at
# +-sqrt(2/3): in each direction this is the average of the consistent and
# lumped 1D mass matrices, which removes most of the h^2 dispersion error.
# The stiffness is always integrated exactly with 2x2 Gauss.
MASS_RULES = {
    "consistent": 1.0 / np.sqrt(3.0),
    "blended": np.sqrt(2.0 / 3.0),
}
DEFAULT_MASS_RULE = "blended"
_GAUSS = 1.0 / np.sqrt(3.0)

_NODE_SIGNS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def check_polarization(pol: str) -> str:
    p = str(pol).upper()
    if p not in POLARIZATIONS:
        raise ValueError(f"polarization must be 'TE' or 'TM', got {pol!r}")
    return p


def element_matrices(h: float, k, mass_rule: str = DEFAULT_MASS_RULE):
    """Element stiffness and mass of a square bilinear cell of side ``h``.

    ``stiffness[p, q] = int conj((grad + ik) phi_p) . (grad + ik) phi_q``,
    integrated exactly.  ``mass[p, q]`` approximates ``int phi_p phi_q`` with
    the chosen ``mass_rule`` (``"consistent"`` is exact).  Local nodes are
    ordered counter-clockwise from the lower-left corner.

    Returns
    -------
    stiffness : (4, 4) complex Hermitian array
    mass : (4, 4) real symmetric array
    """
    if not h > 0:
        raise ValueError(f"cell size must be positive, got {h!r}")
    try:
        gm = MASS_RULES[mass_rule]
    except KeyError:
        raise ValueError(
            f"unknown mass rule {mass_rule!r}; choose from {sorted(MASS_RULES)}"
        ) from None
    k = np.asarray(k, dtype=float).reshape(2)
    jac = (h / 2.0) ** 2
    sx, sy = _NODE_SIGNS[:, 0], _NODE_SIGNS[:, 1]

    stiffness = np.zeros((4, 4), dtype=complex)
    for xi in (-_GAUSS, _GAUSS):
        for eta in (-_GAUSS, _GAUSS):
            phi = (1 + sx * xi) * (1 + sy * eta) / 4.0
            grad = np.column_stack(
                [sx * (1 + sy * eta) / 4.0, sy * (1 + sx * xi) / 4.0]
            ) * (2.0 / h)
            shifted = grad + 1j * np.outer(phi, k)
            stiffness += jac * shifted.conj() @ shifted.T

    mass = np.zeros((4, 4))
    for xi in (-gm, gm):
        for eta in (-gm, gm):
            phi = (1 + sx * xi) * (1 + sy * eta) / 4.0
            mass += jac * np.outer(phi, phi)
    stiffness = 0.5 * (stiffness + stiffness.conj().T)
    mass = 0.5 * (mass + mass.T)
    return stiffness, mass


def assemble(grid: Grid, elem: np.ndarray, weights=None) -> sp.csr_matrix:
    """Scatter one element matrix over all cells, cell ``c`` scaled by ``weights[c]``."""
    conn = grid.connectivity
    n_cells = grid.n_cells
    w = np.ones(n_cells) if weights is None else np.asarray(weights, dtype=float)
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    data = (w[:, None, None] * elem[None, :, :]).reshape(n_cells, 16).ravel()
    mat = sp.coo_matrix((data, (rows, cols)), shape=(grid.n_dofs, grid.n_dofs))
    return mat.tocsr()


@dataclass(frozen=True)
class AffineOperatorFamily:
    """Operators at one wavevector, affine in ``1/eps`` (TE) or ``eps`` (TM)."""

    polarization: str
    k: np.ndarray
    symmetry: SymmetryMap = field(repr=False)
    elem_stiffness: np.ndarray = field(repr=False)
    elem_mass: np.ndarray = field(repr=False)
    fixed: sp.csr_matrix = field(repr=False)
    mass_rule: str = DEFAULT_MASS_RULE

    @property
    def grid(self) -> Grid:
        return self.symmetry.grid

    @property
    def dof_count(self) -> int:
        return self.grid.n_dofs

    @property
    def n_terms(self) -> int:
        return self.symmetry.n_eps

    @property
    def term_element(self) -> np.ndarray:
        """Element matrix carried by the design-dependent terms."""
        return self.elem_stiffness if self.polarization == "TE" else self.elem_mass

    def term(self, i: int) -> sp.csr_matrix:
        """``A_i(k)`` for TE, ``M_i`` for TM."""
        weights = np.zeros(self.grid.n_cells)
        weights[self.symmetry.cells_of_orbit[i]] = 1.0
        return assemble(self.grid, self.term_element, weights)

    def terms(self) -> list:
        return [self.term(i) for i in range(self.n_terms)]

    def combine(self, coefficients) -> sp.csr_matrix:
        """``sum_i coefficients[i] * term(i)`` assembled in one pass."""
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (self.n_terms,):
            raise ValueError(
                f"expected {self.n_terms} coefficients, got shape {coefficients.shape}"
            )
        return assemble(self.grid, self.term_element, coefficients[self.symmetry.orbit_of_cell])

    def project(self, phi: np.ndarray):
        """Reduced matrices ``phi^* T phi`` for every affine term and the fixed operator.

        Returns ``(term_blocks, fixed_block)`` with shapes ``(n_terms, a, a)``
        and ``(a, a)``; all blocks are Hermitian.
        """
        phi = np.asarray(phi)
        if phi.ndim != 2 or phi.shape[0] != self.dof_count:
            raise ValueError(
                f"basis must have {self.dof_count} rows, got shape {phi.shape}"
            )
        local = phi[self.grid.connectivity]  # (cells, 4, a)
        per_cell = np.einsum("cpa,pq,cqb->cab", local.conj(), self.term_element, local)
        blocks = np.zeros((self.n_terms,) + per_cell.shape[1:], dtype=complex)
        np.add.at(blocks, self.symmetry.orbit_of_cell, per_cell)
        blocks = 0.5 * (blocks + blocks.conj().transpose(0, 2, 1))
        fixed = phi.conj().T @ (self.fixed @ phi)
        fixed = 0.5 * (fixed + fixed.conj().T)
        return blocks, fixed


def assemble_family(
    grid: Grid, symmetry: SymmetryMap, k, pol: str, mass_rule: str = DEFAULT_MASS_RULE
) -> AffineOperatorFamily:
    pol = check_polarization(pol)
    if symmetry.grid is not grid and symmetry.grid.n != grid.n:
        raise ValueError("symmetry map does not belong to this grid")
    k = np.asarray(k, dtype=float).reshape(2).copy()
    k.setflags(write=False)
    ke, me = element_matrices(grid.h, k, mass_rule)
    fixed = assemble(grid, me if pol == "TE" else ke)
    return AffineOperatorFamily(
        polarization=pol,
        k=k,
        symmetry=symmetry,
        elem_stiffness=ke,
        elem_mass=me,
        fixed=fixed,
        mass_rule=mass_rule,
    )


def _as_eps(family: AffineOperatorFamily, design) -> np.ndarray:
    if isinstance(design, DielectricDesign):
        if design.n_eps != family.n_terms:
            raise ValueError(
                f"design has {design.n_eps} variables, family expects {family.n_terms}"
            )
        return design.eps
    eps = np.asarray(design, dtype=float)
    if eps.shape != (family.n_terms,):
        raise ValueError(f"design must have {family.n_terms} entries, got {eps.shape}")
    if not np.all(eps > 0):
        raise ValueError("dielectric values must be positive")
    return eps


def evaluate(family: AffineOperatorFamily, design):
    """Stiffness and mass matrices ``(A, M)`` of ``family`` at ``design``.

    ``design`` is a :class:`DielectricDesign` (bounds enforced on construction)
    or a plain positive vector of reduced dielectric values.
    """
    eps = _as_eps(family, design)
    if family.polarization == "TE":
        return family.combine(1.0 / eps), family.fixed
    return family.fixed, family.combine(eps)


def write_triplets(matrix, path) -> None:
    """Write ``row col re im`` lines for the nonzeros of ``matrix``."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    data = np.asarray(coo.data, dtype=complex)[order]
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], data):
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
