"""CSV, JSON and SVG artifacts for designs, band diagrams and runs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bands import BandSolution, normalized_frequency
from .lattice import DielectricDesign, SymmetryMap, restrict_design


def _f(x) -> str:
    return f"{float(x):.17g}"


def write_design_csv(design: DielectricDesign, path) -> None:
    field = design.field()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_row", "cell_col", "eps"])
        for r in range(field.shape[0]):
            for c in range(field.shape[1]):
                w.writerow([r, c, _f(field[r, c])])


def read_design(path, symmetry: SymmetryMap) -> np.ndarray:
    """Reduced design values from a design CSV or a plain list of numbers.

    A CSV with a ``cell_row,cell_col,eps`` header is read per cell and must be
    D4-symmetric; anything else is read as ``n_eps`` whitespace/comma separated
    reduced values.
    """
    text = Path(path).read_text()
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.replace(" ", "").startswith("cell_row"):
        n = symmetry.grid.n
        field = np.full((n, n), np.nan)
        rows = list(csv.DictReader(text.splitlines()))
        for row in rows:
            field[int(row["cell_row"]), int(row["cell_col"])] = float(row["eps"])
        if len(rows) != n * n or np.isnan(field).any():
            raise ValueError(f"design file {path} does not cover all {n * n} cells")
        return restrict_design(symmetry, field.ravel())
    values = np.array([float(v) for v in text.replace(",", " ").split()])
    if values.size != symmetry.n_eps:
        raise ValueError(
            f"design file {path} has {values.size} values, expected {symmetry.n_eps}"
        )
    return values


def write_bands_csv(bands: BandSolution, path) -> None:
    a = bands.kpath.lattice_constant
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k_index", "k_x", "k_y", "band", "lambda", "omega_norm"])
        for t, (k, sol) in enumerate(zip(bands.kpath.points, bands.solutions)):
            for j, lam in enumerate(sol.eigenvalues, start=1):
                w.writerow([t, _f(k[0]), _f(k[1]), j, _f(lam), _f(normalized_frequency(max(lam, 0.0), a))])


def write_json(data, path) -> None:
    with open(path, "w") as fh:
        json.dump(_plain(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


def design_svg(design: DielectricDesign, path, cell_px: int = 8) -> None:
    """Grayscale cells, darker for larger eps; row 0 is drawn at the bottom."""
    field = design.field()
    n = field.shape[0]
    lo, hi = design.eps_min, design.eps_max
    size = n * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    ]
    for r in range(n):
        for c in range(n):
            t = (field[r, c] - lo) / (hi - lo)
            g = int(round(255 * (1.0 - min(max(t, 0.0), 1.0))))
            y = (n - 1 - r) * cell_px
            parts.append(
                f'<rect x="{c * cell_px}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="rgb({g},{g},{g})"/>'
            )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def bands_svg(bands: BandSolution, path, m: int | None = None, width: int = 480, height: int = 360) -> None:
    """Band diagram against arc length along Gamma-X-M-Gamma with the gap shaded.

    The y axis is the normalized frequency ``omega a / 2 pi c``.
    """
    m = bands.m if m is None else m
    kp = bands.kpath
    a = kp.lattice_constant
    s = kp.arc_length()
    total = kp.closed_length()
    s = np.r_[s, total]  # close the loop back to Gamma
    freqs = normalized_frequency(np.clip(bands.values(), 0.0, None), a)
    freqs = np.vstack([freqs, freqs[:1]])
    fmax = float(freqs.max()) * 1.05 or 1.0
    pad = 40

    def px(xv, yv):
        return (pad + (width - 2 * pad) * xv / total, height - pad - (height - 2 * pad) * yv / fmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if m + 1 <= bands.n_bands:
        lo = normalized_frequency(bands.band(m).max(), a)
        hi = normalized_frequency(bands.band(m + 1).min(), a)
        if hi > lo:
            _, y_hi = px(0, hi)
            _, y_lo = px(0, lo)
            parts.append(
                f'<rect x="{pad}" y="{y_hi:.2f}" width="{width - 2 * pad}" '
                f'height="{y_lo - y_hi:.2f}" fill="#ffd27f" fill-opacity="0.6"/>'
            )
    for j in range(freqs.shape[1]):
        pts = " ".join("{:.2f},{:.2f}".format(*px(sx, f)) for sx, f in zip(s, freqs[:, j]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')
    corner_s = [s[i] for i in sorted(kp.labels)] + [total]
    names = [kp.labels[i] for i in sorted(kp.labels)] + ["Γ"]
    for sx, name in zip(corner_s, names):
        x0, _ = px(sx, 0)
        parts.append(
            f'<line x1="{x0:.2f}" y1="{pad}" x2="{x0:.2f}" y2="{height - pad}" stroke="#999" stroke-dasharray="3,3"/>'
        )
        parts.append(f'<text x="{x0:.2f}" y="{height - pad + 16}" text-anchor="middle" font-size="12">{name}</text>')
    parts.append(
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="black"/>'
    )
    parts.append(
        f'<text x="12" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 12 {height / 2:.0f})" '
        f'text-anchor="middle">ωa/2πc</text>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
