"""Truncated eigenspaces frozen at the incumbent design and their reduced blocks.

Around the gap above band ``m`` only a few eigenvectors matter at each k: the
``a_k`` whose eigenvalues lie within a relative distance ``r_l`` below
``lambda^m`` and the ``b_k`` within ``r_u`` above ``lambda^{m+1}``.  Projecting
the affine operator terms onto these vectors gives small Hermitian blocks that
are affine in the design variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .assembly import AffineOperatorFamily
from .bands import BandSolution
from .lattice import DielectricDesign

# Relative size below which lambda^m is treated as the zero eigenvalue of the
# constant mode (band 1 at Gamma).
ZERO_EIGENVALUE_TOL = 1e-9


class InsufficientBandsError(RuntimeError):
    """Not enough eigenpairs were computed to close the upper window."""

    def __init__(self, k_index: int, computed: int):
        self.k_index = k_index
        self.computed = computed
        super().__init__(
            f"all {computed} computed eigenvalues at k index {k_index} fall inside the "
            f"upper window; solve for more bands (increase m_max)"
        )


class SubspaceDims(NamedTuple):
    a: int
    b: int
    lower_saturated: bool
    upper_saturated: bool


def select_dims(eigenvalues, m: int, r_l: float, r_u: float) -> SubspaceDims:
    """Smallest ``a``, ``b`` whose windows hold every eigenvalue within ``r_l``/``r_u``.

    ``a`` counts eigenvalues ``lambda^j, j <= m`` with
    ``(lambda^m - lambda^j) / lambda^m <= r_l``; ``b`` counts ``lambda^j, j > m``
    with ``(lambda^j - lambda^{m+1}) / lambda^{m+1} <= r_u``.  Values exactly on
    a threshold are included.  A window that reaches the end of the list is
    flagged as saturated.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if m < 1 or lam.size < m + 1:
        raise ValueError(f"need at least m + 1 = {m + 1} eigenvalues, got {lam.size}")
    if not (r_l > 0 and r_u > 0):
        raise ValueError("r_l and r_u must be positive")
    lam_m, lam_m1 = lam[m - 1], lam[m]
    if lam_m <= 0 or lam_m1 <= 0:
        raise ValueError(
            f"band edges must be positive to form relative gaps, got {lam_m!r}, {lam_m1!r}"
        )
    below = (lam_m - lam[:m]) / lam_m <= r_l
    above = (lam[m:] - lam_m1) / lam_m1 <= r_u
    a = int(np.count_nonzero(below))
    b = int(np.count_nonzero(above))
    return SubspaceDims(a, b, a == m, m + b == lam.size)


@dataclass(frozen=True)
class KSubspace:
    k: np.ndarray
    a: int
    b: int
    phi_a: np.ndarray = field(repr=False)
    phi_b: np.ndarray = field(repr=False)
    eig_a: np.ndarray = field(repr=False)
    eig_b: np.ndarray = field(repr=False)
    lower_saturated: bool = False


@dataclass(frozen=True)
class ReducedSubspace:
    m: int
    r_l: float
    r_u: float
    per_k: tuple = field(repr=False)
    lambda_lower: float = 0.0
    lambda_upper: float = 0.0
    design: DielectricDesign | None = field(default=None, repr=False)

    @property
    def a(self) -> list:
        return [s.a for s in self.per_k]

    @property
    def b(self) -> list:
        return [s.b for s in self.per_k]


def build_reduced_subspace(
    bands: BandSolution,
    m: int,
    r_l: float,
    r_u: float,
    design: DielectricDesign | None = None,
) -> ReducedSubspace:
    """Extract ``Phi_a`` and ``Phi_b`` at every k from the incumbent eigenpairs.

    Raises :class:`InsufficientBandsError` when the upper window at some k is
    not closed by the computed eigenvalues.
    """
    per_k = []
    for t, sol in enumerate(bands.solutions):
        lam = sol.eigenvalues
        if lam.size < m + 1:
            raise InsufficientBandsError(t, lam.size)
        if lam[m - 1] <= ZERO_EIGENVALUE_TOL * max(lam[m], 1.0):
            # band m is the zero mode: every lower eigenvalue coincides with it
            dims = select_dims(np.r_[np.ones(m), lam[m:]], m, r_l, r_u)
            a, b, lower_sat, upper_sat = m, dims.b, True, dims.upper_saturated
        else:
            a, b, lower_sat, upper_sat = select_dims(lam, m, r_l, r_u)
        if upper_sat:
            raise InsufficientBandsError(t, lam.size)
        vecs = sol.eigenvectors
        per_k.append(
            KSubspace(
                k=np.asarray(sol.k) if sol.k is not None else bands.kpath.points[t],
                a=a,
                b=b,
                phi_a=vecs[:, m - a : m],
                phi_b=vecs[:, m : m + b],
                eig_a=lam[m - a : m],
                eig_b=lam[m : m + b],
                lower_saturated=lower_sat,
            )
        )
    return ReducedSubspace(
        m=m,
        r_l=r_l,
        r_u=r_u,
        per_k=tuple(per_k),
        lambda_lower=float(bands.band(m).max()),
        lambda_upper=float(bands.band(m + 1).min()),
        design=design,
    )


def embed_real(H) -> np.ndarray:
    """Real symmetric ``[[Re H, -Im H], [Im H, Re H]]`` of a Hermitian matrix.

    The embedding is PSD exactly when ``H`` is, and repeats every eigenvalue of
    ``H`` twice.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    dev = np.abs(H - H.conj().T).max() if H.size else 0.0
    if dev > 1e-12 * max(1.0, np.abs(H).max()):
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:g})")
    re, im = H.real, H.imag
    emb = np.block([[re, -im], [im, re]])
    return 0.5 * (emb + emb.T)


@dataclass(frozen=True)
class KBlocks:
    """Reduced blocks at one k.

    ``*_terms[i]`` is the projection of the i-th affine term (TE: stiffness
    ``A_i``, TM: mass ``M_i``); ``*_fixed`` projects the design-independent
    operator (TE: mass, TM: stiffness).
    """

    k: np.ndarray
    lower_terms: np.ndarray = field(repr=False)
    lower_fixed: np.ndarray = field(repr=False)
    upper_terms: np.ndarray = field(repr=False)
    upper_fixed: np.ndarray = field(repr=False)

    def embedded(self):
        """Real symmetric embeddings of all four block groups."""
        return (
            np.array([embed_real(b) for b in self.lower_terms]),
            embed_real(self.lower_fixed),
            np.array([embed_real(b) for b in self.upper_terms]),
            embed_real(self.upper_fixed),
        )


@dataclass(frozen=True)
class ReducedBlocks:
    polarization: str
    per_k: tuple = field(repr=False)
    subspace: ReducedSubspace = field(repr=False, default=None)

    @property
    def n_k(self) -> int:
        return len(self.per_k)

    @property
    def n_eps(self) -> int:
        return self.per_k[0].lower_terms.shape[0]


def reduce_k(family: AffineOperatorFamily, ksub: KSubspace) -> KBlocks:
    if ksub.phi_a.shape[0] != family.dof_count:
        raise ValueError("subspace and operator family have different sizes")
    if not np.allclose(family.k, ksub.k, rtol=0, atol=1e-12):
        raise ValueError(f"family k={family.k} does not match subspace k={ksub.k}")
    lo_terms, lo_fixed = family.project(ksub.phi_a)
    up_terms, up_fixed = family.project(ksub.phi_b)
    return KBlocks(family.k, lo_terms, lo_fixed, up_terms, up_fixed)


def reduce_blocks(families, subspace: ReducedSubspace) -> ReducedBlocks:
    """Project every family onto the matching per-k subspace."""
    if isinstance(families, AffineOperatorFamily):
        families = [families]
    if len(families) != len(subspace.per_k):
        raise ValueError(
            f"{len(families)} families for {len(subspace.per_k)} subspaces"
        )
    pols = {f.polarization for f in families}
    if len(pols) != 1:
        raise ValueError("families mix polarizations")
    per_k = tuple(reduce_k(f, s) for f, s in zip(families, subspace.per_k))
    return ReducedBlocks(polarization=pols.pop(), per_k=per_k, subspace=subspace)
