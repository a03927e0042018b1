"""Square-lattice unit cell, D4 design reduction and the Brillouin-zone path.

The unit cell is ``[-1, 1] x [-1, 1]`` (lattice constant ``a = 2``), split into
``n x n`` square cells.  Cells are numbered row-major: cell ``(r, c)`` has
index ``r * n + c`` and centre ``(-1 + (c + 1/2) h, -1 + (r + 1/2) h)``.
Periodic vertices are numbered the same way, vertex ``(r, c)`` sitting at the
lower-left corner of cell ``(r, c)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LATTICE_CONSTANT = 2.0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``n x n`` square cells on ``[-1, 1]^2``."""

    n: int
    connectivity: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 2.0 / self.n

    @property
    def n_cells(self) -> int:
        return self.n * self.n

    @property
    def n_dofs(self) -> int:
        return self.n * self.n

    def cell_centers(self) -> np.ndarray:
        """(n_cells, 2) array of cell centre coordinates."""
        idx = (np.arange(self.n) + 0.5) * self.h - 1.0
        yy, xx = np.meshgrid(idx, idx, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


def build_grid(n: int) -> Grid:
    """Build the periodic grid with ``n`` cells per side (``n`` even, >= 2).

    The connectivity lists the four periodic vertex indices of every cell in
    counter-clockwise order starting at the lower-left corner.
    """
    if isinstance(n, bool) or int(n) != n or n < 2 or n % 2:
        raise ValueError(f"grid side must be an even integer >= 2, got {n!r}")
    n = int(n)
    r, c = np.divmod(np.arange(n * n), n)
    r1 = (r + 1) % n
    c1 = (c + 1) % n
    conn = np.column_stack([r * n + c, r * n + c1, r1 * n + c1, r1 * n + c])
    conn.setflags(write=False)
    return Grid(n=n, connectivity=conn)


@dataclass(frozen=True)
class SymmetryMap:
    """Partition of the cells into orbits of the square's symmetry group.

    Reduced variables are numbered in order of first appearance when the
    cells are scanned row-major.
    """

    grid: Grid
    orbit_of_cell: np.ndarray = field(repr=False)
    cells_of_orbit: tuple = field(repr=False)

    @property
    def n_eps(self) -> int:
        return len(self.cells_of_orbit)

    def orbit_sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.cells_of_orbit])

    def representatives(self) -> np.ndarray:
        """First (row-major) cell of every orbit."""
        return np.array([c[0] for c in self.cells_of_orbit])


def build_symmetry_map(grid: Grid) -> SymmetryMap:
    n = grid.n
    r, c = np.divmod(np.arange(grid.n_cells), n)
    # doubled centre coordinates are odd integers in [-(n-1), n-1]
    ax = np.abs(2 * c + 1 - n)
    ay = np.abs(2 * r + 1 - n)
    keys = np.maximum(ax, ay) * (n + 1) + np.minimum(ax, ay)

    orbit_of_cell = np.empty(grid.n_cells, dtype=np.intp)
    index_of_key: dict[int, int] = {}
    members: list[list[int]] = []
    for cell, key in enumerate(keys.tolist()):
        i = index_of_key.setdefault(key, len(members))
        if i == len(members):
            members.append([])
        members[i].append(cell)
        orbit_of_cell[cell] = i
    orbit_of_cell.setflags(write=False)
    cells = tuple(np.array(m, dtype=np.intp) for m in members)
    return SymmetryMap(grid=grid, orbit_of_cell=orbit_of_cell, cells_of_orbit=cells)


def expand_design(symmetry: SymmetryMap, reduced) -> np.ndarray:
    """Per-cell values from one value per orbit."""
    reduced = np.asarray(reduced)
    if reduced.shape != (symmetry.n_eps,):
        raise ValueError(
            f"reduced vector must have length {symmetry.n_eps}, got shape {reduced.shape}"
        )
    return reduced[symmetry.orbit_of_cell]


def restrict_design(symmetry: SymmetryMap, per_cell, atol: float = 0.0) -> np.ndarray:
    """Inverse of :func:`expand_design` for D4-symmetric fields.

    Raises ``ValueError`` if the field varies within an orbit by more than
    ``atol``.
    """
    per_cell = np.asarray(per_cell, dtype=float).ravel()
    if per_cell.shape != (symmetry.grid.n_cells,):
        raise ValueError(
            f"field must have {symmetry.grid.n_cells} cells, got {per_cell.size}"
        )
    reduced = per_cell[symmetry.representatives()]
    spread = np.abs(per_cell - reduced[symmetry.orbit_of_cell]).max()
    if spread > atol:
        raise ValueError(f"field is not D4-symmetric (max deviation {spread:g})")
    return reduced


# The eight symmetries of the square acting on (row, col) cell indices.
def d4_images(field2d: np.ndarray) -> list[np.ndarray]:
    f = np.asarray(field2d)
    rots = [np.rot90(f, q) for q in range(4)]
    return rots + [r.T for r in rots]


@dataclass(frozen=True)
class DielectricDesign:
    """Symmetry-reduced dielectric distribution within the box ``[eps_min, eps_max]``."""

    eps: np.ndarray
    symmetry: SymmetryMap = field(repr=False)
    eps_min: float = 1.0
    eps_max: float = 11.4

    def __post_init__(self):
        eps = np.array(self.eps, dtype=float)
        if eps.shape != (self.symmetry.n_eps,):
            raise ValueError(
                f"design must have {self.symmetry.n_eps} entries, got shape {eps.shape}"
            )
        if not 0 < self.eps_min < self.eps_max:
            raise ValueError("need 0 < eps_min < eps_max")
        slack = 1e-12 * self.eps_max
        if eps.min() < self.eps_min - slack or eps.max() > self.eps_max + slack:
            raise ValueError(
                f"design values must lie in [{self.eps_min}, {self.eps_max}], "
                f"got range [{eps.min()}, {eps.max()}]"
            )
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)

    @property
    def n_eps(self) -> int:
        return self.eps.size

    @property
    def y(self) -> np.ndarray:
        return 1.0 / self.eps

    @property
    def z(self) -> np.ndarray:
        return self.eps

    def expanded(self) -> np.ndarray:
        return expand_design(self.symmetry, self.eps)

    def field(self) -> np.ndarray:
        """(n, n) array indexed by (cell_row, cell_col)."""
        n = self.symmetry.grid.n
        return self.expanded().reshape(n, n)

    def with_eps(self, eps) -> "DielectricDesign":
        return DielectricDesign(eps, self.symmetry, self.eps_min, self.eps_max)


@dataclass(frozen=True)
class KPath:
    points: np.ndarray
    labels: dict
    lattice_constant: float = LATTICE_CONSTANT

    @property
    def n_k(self) -> int:
        return len(self.points)

    def corners(self) -> np.ndarray:
        a = self.lattice_constant
        return np.array([[0.0, 0.0], [np.pi / a, 0.0], [np.pi / a, np.pi / a]])

    def arc_length(self) -> np.ndarray:
        """Cumulative distance along the path, starting at 0 for the first point."""
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    def closed_length(self) -> float:
        a = self.lattice_constant
        return (2.0 + np.sqrt(2.0)) * np.pi / a


def build_k_path(n_k: int = 12, lattice_constant: float = LATTICE_CONSTANT) -> KPath:
    """Points on the closed loop Gamma -> X -> M -> Gamma.

    The three corners are always included.  The remaining ``n_k - 3`` points are
    shared among the segments in proportion to their length (largest remainder,
    ties to the earlier segment) and spaced evenly inside each segment.
    """
    if isinstance(n_k, bool) or int(n_k) != n_k or n_k < 3:
        raise ValueError(f"n_k must be an integer >= 3, got {n_k!r}")
    n_k = int(n_k)
    a = lattice_constant
    gamma, x, m = np.array([0.0, 0.0]), np.array([np.pi / a, 0.0]), np.array([np.pi / a, np.pi / a])
    segments = [(gamma, x), (x, m), (m, gamma)]
    lengths = np.array([np.linalg.norm(e - s) for s, e in segments])

    extra = n_k - 3
    share = extra * lengths / lengths.sum()
    counts = np.floor(share + 1e-12).astype(int)
    remainder = share - counts
    for seg in sorted(range(3), key=lambda s: (-round(remainder[s], 12), s))[: extra - counts.sum()]:
        counts[seg] += 1

    points, labels = [], {}
    for (start, end), count, name in zip(segments, counts, ("Γ", "X", "M")):
        labels[len(points)] = name
        points.append(start)
        for j in range(1, count + 1):
            t = j / (count + 1)
            points.append((1.0 - t) * start + t * end)
    return KPath(points=np.array(points), labels=labels, lattice_constant=a)


def distance_to_path(kpath: KPath, p) -> float:
    """Euclidean distance from ``p`` to the closed polyline Gamma-X-M-Gamma."""
    p = np.asarray(p, dtype=float)
    c = kpath.corners()
    best = np.inf
    for s, e in ((c[0], c[1]), (c[1], c[2]), (c[2], c[0])):
        d = e - s
        t = np.clip(np.dot(p - s, d) / np.dot(d, d), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p - (s + t * d))))
    return best
