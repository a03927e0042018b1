"""Outer iteration: freeze subspaces, solve the reduced SDP, move, repeat."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble_family, check_polarization
from .bands import BandSolution, band_diagram
from .eig import NumericalError
from .lattice import (
    DielectricDesign,
    SymmetryMap,
    build_grid,
    build_k_path,
    build_symmetry_map,
)
from .sdp import (
    DegenerateSolutionError,
    SolverOptions,
    build_fractional,
    charnes_cooper,
    decision_vector,
    recover,
    solve_sdp,
    write_problem,
)
from .subspace import InsufficientBandsError, build_reduced_subspace, reduce_blocks

log = logging.getLogger(__name__)

INIT_KINDS = ("uniform-random", "rods", "veins", "file")
TERMINATIONS = ("converged", "max_outer", "solver_failure")


@dataclass
class RunConfig:
    n: int = 32
    polarization: str = "TM"
    m: int = 1
    eps_min: float = 1.0
    eps_max: float = 11.4
    n_k: int = 12
    r_l: float = 0.1
    r_u: float = 0.1
    tol: float = 1e-4
    max_outer: int = 30
    init_kind: str = "uniform-random"
    seed: int = 0
    radius: float = 0.38
    thickness: float = 0.2
    init_file: str | None = None
    restarts: int = 1
    solver_tol: float = 1e-8
    move_limit: float | None = None
    guard_bands: int = 4
    eig_method: str = "auto"
    output_dir: str | None = None
    snapshots: bool = False
    dump_sdp: bool = False

    def __post_init__(self):
        self.polarization = check_polarization(self.polarization)
        if not 0 < self.eps_min < self.eps_max:
            raise ValueError("need 0 < eps_min < eps_max")
        if self.m < 1:
            raise ValueError("band index m must be >= 1")
        if self.n_k < 3:
            raise ValueError("n_k must be >= 3")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.n < 2 or self.n % 2:
            raise ValueError("grid side n must be an even integer >= 2")
        if not (self.r_l > 0 and self.r_u > 0):
            raise ValueError("r_l and r_u must be positive")
        if self.init_kind not in INIT_KINDS:
            raise ValueError(f"init kind must be one of {INIT_KINDS}, got {self.init_kind!r}")
        if self.init_kind == "file" and not self.init_file:
            raise ValueError("init kind 'file' requires init.file")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.move_limit is not None and not self.move_limit > 0:
            raise ValueError("move_limit must be positive")
        if self.guard_bands < 1:
            raise ValueError("guard_bands must be >= 1")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")
        if self.radius < 0 or self.thickness < 0:
            raise ValueError("radius and thickness must be non-negative")
        if self.eig_method not in ("auto", "dense", "sparse"):
            raise ValueError(f"eig_method must be auto, dense or sparse, got {self.eig_method!r}")

    @property
    def bounds(self) -> tuple:
        return (self.eps_min, self.eps_max)


@dataclass
class IterationRecord:
    iteration: int
    gap_midgap: float
    lambda_lower: float
    lambda_upper: float
    step: float
    a: list
    b: list
    status: str
    sdp_objective: float
    incumbent_objective: float
    clamp: float
    wall_time: float


@dataclass
class RunResult:
    config: RunConfig
    history: list
    final_design: DielectricDesign = field(repr=False)
    final_bands: BandSolution = field(repr=False)
    termination: str
    message: str = ""

    @property
    def final_gap(self) -> float:
        return self.final_bands.gap_midgap

    @property
    def initial_gap(self) -> float:
        return self.history[0].gap_midgap if self.history else self.final_gap

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "termination": self.termination,
            "message": self.message,
            "iterations": len(self.history),
            "initial_gap_midgap": self.initial_gap,
            "final": {
                "gap_midgap": self.final_gap,
                "lambda_lower": self.final_bands.lambda_lower,
                "lambda_upper": self.final_bands.lambda_upper,
                "eps": self.final_design.eps.tolist(),
            },
            "history": [asdict(h) for h in self.history],
        }


# ---------------------------------------------------------------------------
# Initial designs
# ---------------------------------------------------------------------------


def initial_config(
    kind: str,
    seed: int,
    symmetry: SymmetryMap,
    bounds: tuple,
    radius: float = 0.38,
    thickness: float = 0.2,
    path=None,
) -> DielectricDesign:
    """Starting design of the given kind.

    ``rods``: ``eps_max`` inside a centred disk of ``radius`` (cell half-width 1).
    ``veins``: ``eps_max`` on the centred cross ``|x| < thickness/2`` or
    ``|y| < thickness/2``, which tiles into a grid of orthogonal veins.
    ``uniform-random``: i.i.d. uniform on the bounds from ``seed``.
    ``file``: a design CSV or a list of reduced values read from ``path``.
    """
    eps_min, eps_max = bounds
    centers = symmetry.grid.cell_centers()[symmetry.representatives()]
    if kind == "uniform-random":
        rng = np.random.default_rng(seed)
        eps = rng.uniform(eps_min, eps_max, symmetry.n_eps)
    elif kind == "rods":
        inside = np.hypot(centers[:, 0], centers[:, 1]) < radius
        eps = np.where(inside, eps_max, eps_min)
    elif kind == "veins":
        on = np.minimum(np.abs(centers[:, 0]), np.abs(centers[:, 1])) < thickness / 2
        eps = np.where(on, eps_max, eps_min)
    elif kind == "file":
        from .io import read_design

        eps = read_design(path, symmetry)
    else:
        raise ValueError(f"unknown initial configuration {kind!r}")
    return DielectricDesign(eps, symmetry, eps_min, eps_max)


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------


class _Problem:
    """Grid, path and per-k operator families shared by all outer iterations."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.grid = build_grid(config.n)
        self.symmetry = build_symmetry_map(self.grid)
        self.kpath = build_k_path(config.n_k)
        self.families = [
            assemble_family(self.grid, self.symmetry, k, config.polarization)
            for k in self.kpath.points
        ]
        self.guard = config.guard_bands

    def bands(self, design: DielectricDesign, extra: int | None = None) -> BandSolution:
        cfg = self.config
        count = min(cfg.m + 1 + (self.guard if extra is None else extra), self.grid.n_dofs)
        return band_diagram(
            design,
            self.kpath,
            cfg.polarization,
            count,
            m=cfg.m,
            families=self.families,
            method=cfg.eig_method,
        )

    def subspace(self, design: DielectricDesign):
        """Eigensolve at ``design`` and build the reduced subspace, growing m_max as needed."""
        cfg = self.config
        while True:
            bands = self.bands(design)
            try:
                sub = build_reduced_subspace(bands, cfg.m, cfg.r_l, cfg.r_u, design)
            except InsufficientBandsError:
                if cfg.m + 1 + self.guard >= self.grid.n_dofs:
                    raise
                self.guard += 4
                continue
            # keep a couple of spare pairs beyond the widest upper window
            self.guard = max(self.guard, max(sub.b) + 2)
            return bands, sub


def _step(x_new: np.ndarray, x_old: np.ndarray) -> float:
    return float(np.abs(x_new - x_old).max() / max(1.0, np.abs(x_old).max()))


def optimize(config: RunConfig, initial: DielectricDesign | None = None) -> RunResult:
    """Run the subspace/SDP outer iteration from ``initial`` (or ``config``'s init)."""
    cfg = config
    prob = _Problem(cfg)
    if initial is None:
        design = initial_config(
            cfg.init_kind, cfg.seed, prob.symmetry, cfg.bounds,
            radius=cfg.radius, thickness=cfg.thickness, path=cfg.init_file,
        )
    else:
        design = initial.with_eps(initial.eps)
    pol = cfg.polarization
    opts = SolverOptions(feastol=cfg.solver_tol, abstol=cfg.solver_tol, reltol=cfg.solver_tol)
    out = Path(cfg.output_dir) if cfg.output_dir else None

    history: list[IterationRecord] = []
    termination, message = "max_outer", ""
    best = (-np.inf, design)
    for it in range(cfg.max_outer):
        t0 = time.perf_counter()
        try:
            bands, sub = prob.subspace(design)
        except (NumericalError, InsufficientBandsError) as exc:
            termination, message = "solver_failure", f"eigensolve: {exc}"
            break
        lam_l, lam_u = sub.lambda_lower, sub.lambda_upper
        J = bands.gap_midgap
        if J > best[0]:
            best = (J, design)

        blocks = reduce_blocks(prob.families, sub)
        x_hat = decision_vector(design, lam_l, lam_u, pol)
        floor = 1e-6 * min(x_hat[-2:])
        fsdp = build_fractional(
            blocks, pol, cfg.bounds, floor, move_limit=cfg.move_limit, incumbent=design
        )
        lsdp = charnes_cooper(fsdp)
        if out is not None and cfg.dump_sdp:
            out.mkdir(parents=True, exist_ok=True)
            write_problem(lsdp, out / f"sdp_{it:03d}.txt")
        sol = solve_sdp(lsdp, opts)

        record = IterationRecord(
            iteration=it,
            gap_midgap=J,
            lambda_lower=lam_l,
            lambda_upper=lam_u,
            step=float("nan"),
            a=sub.a,
            b=sub.b,
            status=sol.status,
            sdp_objective=sol.objective,
            incumbent_objective=fsdp.objective(x_hat),
            clamp=0.0,
            wall_time=0.0,
        )
        history.append(record)
        if out is not None and cfg.snapshots:
            _snapshot(out, it, design, bands)

        if not sol.ok:
            diag = np.array([fsdp.min_lmi_eigenvalues(x_hat).min()])
            termination = "solver_failure"
            message = f"SDP status {sol.status}; min incumbent LMI eigenvalue {diag[0]:.3e}"
            record.wall_time = time.perf_counter() - t0
            break
        try:
            rec = recover(sol, fsdp)
        except DegenerateSolutionError as exc:
            termination, message = "solver_failure", str(exc)
            record.wall_time = time.perf_counter() - t0
            break

        new_design = design.with_eps(rec.eps)
        x_star = decision_vector(new_design, rec.lambda_lower, rec.lambda_upper, pol)
        record.step = _step(x_star, x_hat)
        record.clamp = rec.clamp
        record.wall_time = time.perf_counter() - t0
        log.info(
            "iter %d  J=%.6f  sdp=%.6f  step=%.3e  a=%s b=%s",
            it, J, sol.objective, record.step, sub.a, sub.b,
        )
        design = new_design
        if record.step <= cfg.tol:
            termination = "converged"
            break

    if termination == "solver_failure":
        design = best[1]
    try:
        final_bands = prob.bands(design)
    except NumericalError as exc:
        raise NumericalError(f"final band computation failed: {exc}") from exc
    return RunResult(
        config=cfg,
        history=history,
        final_design=design,
        final_bands=final_bands,
        termination=termination,
        message=message,
    )


def _snapshot(out: Path, it: int, design: DielectricDesign, bands: BandSolution) -> None:
    from .io import write_bands_csv, write_design_csv

    snap = out / "snapshots"
    snap.mkdir(parents=True, exist_ok=True)
    write_design_csv(design, snap / f"design_{it:03d}.csv")
    write_bands_csv(bands, snap / f"bands_{it:03d}.csv")
    with open(snap / "log.txt", "a") as fh:
        fh.write(
            f"iter {it} J {bands.gap_midgap:.17g} lower {bands.lambda_lower:.17g} "
            f"upper {bands.lambda_upper:.17g}\n"
        )


def multi_restart(config: RunConfig, restarts: int | None = None):
    """Run ``optimize`` with seeds ``seed, seed + 1, ...``.

    Returns ``(best, results)``; ``best`` has the largest final gap-midgap ratio.
    A run that raises is logged and left out of ``results``.
    """
    from dataclasses import replace

    restarts = config.restarts if restarts is None else restarts
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    results = []
    for i in range(restarts):
        cfg = replace(config, seed=config.seed + i)
        try:
            results.append(optimize(cfg))
        except Exception as exc:  # one bad start must not sink the batch
            log.error("restart %d (seed %d) failed: %s", i, cfg.seed, exc)
    if not results:
        raise RuntimeError("every restart failed")
    best = max(results, key=lambda r: r.final_gap)
    return best, results
