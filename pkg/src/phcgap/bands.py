"""Band diagrams over the k-path and the gap-midgap ratio."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import AffineOperatorFamily, assemble_family, check_polarization, evaluate
from .eig import EigenSolution, NumericalError, solve_gevp
from .lattice import DielectricDesign, KPath


def gap_midgap(lambda_lower: float, lambda_upper: float) -> float:
    """``(upper - lower) / (upper + lower)`` for positive band edges."""
    if not (lambda_lower > 0 and lambda_upper > 0):
        raise ValueError(
            f"band edges must be positive, got {lambda_lower!r}, {lambda_upper!r}"
        )
    return (lambda_upper - lambda_lower) / (lambda_upper + lambda_lower)


def normalized_frequency(lam, a: float = 2.0):
    """``omega a / (2 pi c)`` from ``lambda = (omega / c)^2``."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise ValueError("eigenvalues must be non-negative")
    out = np.sqrt(lam_arr) * a / (2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BandSolution:
    kpath: KPath = field(repr=False)
    solutions: tuple = field(repr=False)
    polarization: str = "TM"
    m: int = 1

    def values(self) -> np.ndarray:
        """(n_k, n_bands) eigenvalues, truncated to the shortest per-k list."""
        n = min(s.n_pairs for s in self.solutions)
        return np.array([s.eigenvalues[:n] for s in self.solutions])

    @property
    def n_bands(self) -> int:
        return min(s.n_pairs for s in self.solutions)

    def band(self, j: int) -> np.ndarray:
        """Values of band ``j`` (1-based) at every k."""
        return np.array([s.eigenvalues[j - 1] for s in self.solutions])

    @property
    def argmax_k(self) -> int:
        return int(np.argmax(self.band(self.m)))

    @property
    def argmin_k(self) -> int:
        return int(np.argmin(self.band(self.m + 1)))

    @property
    def lambda_lower(self) -> float:
        return float(self.band(self.m).max())

    @property
    def lambda_upper(self) -> float:
        return float(self.band(self.m + 1).min())

    @property
    def gap_midgap(self) -> float:
        return gap_midgap(self.lambda_lower, self.lambda_upper)

    def edges(self, m: int) -> tuple:
        """``(lambda_lower, lambda_upper, J)`` for the gap above band ``m``."""
        lo = float(self.band(m).max())
        hi = float(self.band(m + 1).min())
        return lo, hi, gap_midgap(lo, hi)


def families_for(design: DielectricDesign, kpath: KPath, pol: str) -> list:
    sym = design.symmetry
    return [assemble_family(sym.grid, sym, k, pol) for k in kpath.points]


def band_diagram(
    design: DielectricDesign,
    kpath: KPath,
    pol: str,
    bands: int,
    m: int = 1,
    families: list | None = None,
    method: str = "auto",
) -> BandSolution:
    """Solve the lowest ``bands`` eigenpairs at every k of ``kpath``.

    Pre-assembled ``families`` (one per k, in path order) may be passed to skip
    assembly; they must match ``pol`` and the design's grid.
    """
    pol = check_polarization(pol)
    if m < 1 or bands < m + 1:
        raise ValueError(f"need m >= 1 and bands >= m + 1, got m={m}, bands={bands}")
    if families is None:
        families = families_for(design, kpath, pol)
    elif len(families) != kpath.n_k:
        raise ValueError("one operator family per k-point is required")

    solutions = []
    for t, family in enumerate(families):
        if family.polarization != pol:
            raise ValueError(f"family at k index {t} is {family.polarization}, expected {pol}")
        A, M = evaluate(family, design)
        try:
            sol = solve_gevp(A, M, bands, method=method, k=family.k)
        except NumericalError as exc:
            raise NumericalError(f"eigensolve failed at k index {t}: {exc}") from exc
        solutions.append(sol)
    return BandSolution(kpath=kpath, solutions=tuple(solutions), polarization=pol, m=m)


def free_space_eigenvalues(k, count: int, reach: int = 4, period: float = 2.0) -> np.ndarray:
    """Sorted ``|k + G|^2`` for reciprocal vectors ``G = (2 pi / period) (p, q)``."""
    p = np.arange(-reach, reach + 1)
    P, Q = np.meshgrid(p, p)
    g = 2.0 * np.pi / period
    vals = (k[0] + g * P) ** 2 + (k[1] + g * Q) ** 2
    return np.sort(vals.ravel())[:count]
