"""Linear-fractional SDPs over the reduced blocks and their homogenization.

Decision vectors
----------------
TE: ``y = (1/eps_1, ..., 1/eps_n, lambda_l, lambda_u)``, maximize
``(y_u - y_l) / (y_u + y_l)``.

TM: ``z = (eps_1, ..., eps_n, 1/lambda_l, 1/lambda_u)``, maximize
``(z_l - z_u) / (z_l + z_u)``.

Every LMI is stored as ``const + sum_j x_j coeffs[j] >= 0`` (PSD) with real
symmetric matrices; complex blocks enter through :func:`embed_real`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bands import gap_midgap
from .lattice import DielectricDesign
from .subspace import ReducedBlocks, embed_real

log = logging.getLogger(__name__)

STATUSES = ("optimal", "near-optimal", "infeasible", "unbounded", "numerical-failure")


class DegenerateSolutionError(ArithmeticError):
    """The homogenizing variable of an SDP solution is not positive."""


class Lmi(NamedTuple):
    const: np.ndarray
    coeffs: np.ndarray
    label: str = ""

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def evaluate(self, x) -> np.ndarray:
        return self.const + np.tensordot(np.asarray(x, dtype=float), self.coeffs, axes=1)


def _empty_rows(n: int):
    return np.zeros((0, n)), np.zeros(0)


@dataclass(frozen=True)
class FractionalSdp:
    """``max (c.x + c0) / (d.x + d0)`` s.t. LMIs, ``G x <= h``, ``A x = b``."""

    c: np.ndarray
    d: np.ndarray
    lmis: tuple = field(repr=False)
    G: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    A: np.ndarray | None = field(default=None, repr=False)
    b: np.ndarray | None = field(default=None, repr=False)
    c0: float = 0.0
    d0: float = 0.0
    polarization: str | None = None
    n_eps: int = 0
    eps_bounds: tuple = (1.0, 11.4)
    x_min: np.ndarray | None = field(default=None, repr=False)
    x_max: np.ndarray | None = field(default=None, repr=False)
    floor: float = 0.0

    def __post_init__(self):
        if self.A is None:
            A, b = _empty_rows(self.n_var)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)

    @property
    def n_var(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float((self.c @ x + self.c0) / (self.d @ x + self.d0))

    def min_lmi_eigenvalues(self, x) -> np.ndarray:
        return np.array([np.linalg.eigvalsh(l.evaluate(x)).min() for l in self.lmis])

    def is_feasible(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(self.G @ x - self.h > tol * np.maximum(1.0, np.abs(self.h))):
            return False
        if self.A.size and np.any(np.abs(self.A @ x - self.b) > tol):
            return False
        for lmi in self.lmis:
            scale = max(1.0, np.abs(lmi.coeffs).max(initial=0.0))
            if np.linalg.eigvalsh(lmi.evaluate(x)).min() < -tol * scale:
                return False
        return float(self.d @ x + self.d0) > 0


@dataclass(frozen=True)
class LinearSdp:
    """``max c.v`` s.t. LMIs in ``v``, ``G v <= h``, ``A v = b``; ``v = (w, theta)``."""

    c: np.ndarray
    lmis: tuple = field(repr=False)
    G: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    source: FractionalSdp | None = field(default=None, repr=False)

    @property
    def n_var(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class SdpSolution:
    status: str
    v: np.ndarray | None = field(default=None, repr=False)
    objective: float = float("nan")
    primal_infeasibility: float = float("nan")
    dual_infeasibility: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")

    @property
    def w(self) -> np.ndarray:
        return self.v[:-1]

    @property
    def theta(self) -> float:
        return float(self.v[-1])


@dataclass
class SolverOptions:
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iters: int = 100
    # accepted as near-optimal when the solver stalls within this accuracy
    near_tol: float = 1e-5


# ---------------------------------------------------------------------------
# Building the fractional problem
# ---------------------------------------------------------------------------


def variable_bounds(pol: str, eps_lo, eps_hi):
    """Box on the design part of the decision vector for per-variable eps ranges."""
    eps_lo = np.asarray(eps_lo, dtype=float)
    eps_hi = np.asarray(eps_hi, dtype=float)
    if pol == "TE":
        return 1.0 / eps_hi, 1.0 / eps_lo
    return eps_lo, eps_hi


def decision_vector(design: DielectricDesign, lambda_lower: float, lambda_upper: float, pol: str):
    """The point ``x`` (TE: ``y``, TM: ``z``) describing a design and its band edges."""
    if pol == "TE":
        return np.r_[design.y, lambda_lower, lambda_upper]
    return np.r_[design.z, 1.0 / lambda_lower, 1.0 / lambda_upper]


def _scaled(const, coeffs, label):
    scale = max(np.abs(coeffs).max(initial=0.0), np.abs(const).max(initial=0.0))
    if scale > 0:
        const, coeffs = const / scale, coeffs / scale
    return Lmi(const, coeffs, label)


def build_fractional(
    blocks: ReducedBlocks,
    pol: str,
    bounds: tuple,
    floor: float,
    move_limit: float | None = None,
    incumbent: DielectricDesign | None = None,
) -> FractionalSdp:
    """Assemble the TE or TM fractional SDP from reduced blocks.

    TE, per k: ``sum_i y_i L_i - y_l L_M <= 0`` and ``sum_i y_i U_i - y_u U_M >= 0``.
    TM, per k: ``z_l L_A - sum_i z_i L_Mi <= 0`` and ``z_u U_A - sum_i z_i U_Mi >= 0``.

    Each LMI is divided by its largest coefficient, which leaves the feasible set
    unchanged.  ``move_limit`` (requires ``incumbent``) further restricts every
    ``eps_i`` to ``incumbent.eps[i] +- move_limit``.
    """
    if pol != blocks.polarization:
        raise ValueError(f"blocks are {blocks.polarization}, requested {pol}")
    eps_min, eps_max = bounds
    if not (0 < eps_min < eps_max):
        raise ValueError(f"need 0 < eps_min < eps_max, got {bounds}")
    if not floor > 0:
        raise ValueError(f"floor must be positive, got {floor!r}")

    n_eps = blocks.n_eps
    n = n_eps + 2
    lo, up = n_eps, n_eps + 1
    lmis = []
    for t, kb in enumerate(blocks.per_k):
        lo_terms, lo_fixed, up_terms, up_fixed = kb.embedded()
        s_lo, s_up = lo_fixed.shape[0], up_fixed.shape[0]
        # lower: -(affine) >= 0
        cl = np.zeros((n, s_lo, s_lo))
        cu = np.zeros((n, s_up, s_up))
        if pol == "TE":
            cl[:n_eps] = -lo_terms
            cl[lo] = lo_fixed
            cu[:n_eps] = up_terms
            cu[up] = -up_fixed
        else:
            cl[:n_eps] = lo_terms
            cl[lo] = -lo_fixed
            cu[:n_eps] = -up_terms
            cu[up] = up_fixed
        lmis.append(_scaled(np.zeros((s_lo, s_lo)), cl, f"lower k{t}"))
        lmis.append(_scaled(np.zeros((s_up, s_up)), cu, f"upper k{t}"))

    c = np.zeros(n)
    d = np.zeros(n)
    if pol == "TE":
        c[up], c[lo] = 1.0, -1.0
    else:
        c[lo], c[up] = 1.0, -1.0
    d[lo] = d[up] = 1.0

    eps_lo = np.full(n_eps, float(eps_min))
    eps_hi = np.full(n_eps, float(eps_max))
    if move_limit is not None:
        if incumbent is None:
            raise ValueError("move_limit requires the incumbent design")
        eps_lo = np.maximum(eps_lo, incumbent.eps - move_limit)
        eps_hi = np.minimum(eps_hi, incumbent.eps + move_limit)
    x_min, x_max = variable_bounds(pol, eps_lo, eps_hi)

    eye = np.eye(n_eps, n)
    floor_rows = np.zeros((2, n))
    floor_rows[0, lo] = floor_rows[1, up] = -1.0
    G = np.vstack([eye, -eye, floor_rows])
    h = np.r_[x_max, -x_min, -floor, -floor]
    return FractionalSdp(
        c=c,
        d=d,
        lmis=tuple(lmis),
        G=G,
        h=h,
        polarization=pol,
        n_eps=n_eps,
        eps_bounds=(float(eps_min), float(eps_max)),
        x_min=x_min,
        x_max=x_max,
        floor=float(floor),
    )


# ---------------------------------------------------------------------------
# Homogenization
# ---------------------------------------------------------------------------


def charnes_cooper(fsdp: FractionalSdp) -> LinearSdp:
    """Homogenize with ``w = x / (d.x + d0)`` and ``theta = 1 / (d.x + d0)``.

    Each constraint ``F0 + sum x_j F_j >= 0`` becomes ``theta F0 + sum w_j F_j >= 0``,
    ``G x <= h`` becomes ``G w - h theta <= 0``, and ``d.w + d0 theta = 1``.
    """
    n = fsdp.n_var
    lmis = tuple(
        Lmi(np.zeros_like(l.const), np.concatenate([l.coeffs, l.const[None]]), l.label)
        for l in fsdp.lmis
    )
    theta_row = np.zeros((1, n + 1))
    theta_row[0, -1] = -1.0
    G = np.vstack([np.column_stack([fsdp.G, -fsdp.h]), theta_row])
    h = np.zeros(G.shape[0])
    A = np.vstack([np.column_stack([fsdp.A, -fsdp.b]), np.r_[fsdp.d, fsdp.d0][None]])
    b = np.r_[np.zeros(fsdp.A.shape[0]), 1.0]
    return LinearSdp(c=np.r_[fsdp.c, fsdp.c0], lmis=lmis, G=G, h=h, A=A, b=b, source=fsdp)


def transport(fsdp: FractionalSdp, x) -> np.ndarray:
    """Map a fractional-feasible ``x`` to the homogenized point ``(w, theta)``."""
    x = np.asarray(x, dtype=float)
    den = float(fsdp.d @ x + fsdp.d0)
    if den <= 0:
        raise ValueError("denominator must be positive at x")
    return np.r_[x / den, 1.0 / den]


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def solve_sdp(lsdp: LinearSdp, opts: SolverOptions | None = None) -> SdpSolution:
    """Solve ``lsdp`` with the CVXOPT primal-dual interior-point method.

    The problem reaches the solver as a list of symmetric cone blocks, an
    orthant block, linear equalities and a linear objective.  Failures are
    reported through ``status``; nothing is raised.
    """
    from cvxopt import matrix, solvers

    opts = opts or SolverOptions()
    n = lsdp.n_var
    Gs = [matrix(-l.coeffs.reshape(n, -1).T.copy()) for l in lsdp.lmis]
    hs = [matrix(l.const.copy()) for l in lsdp.lmis]
    kwargs = dict(
        Gl=matrix(lsdp.G) if lsdp.G.size else None,
        hl=matrix(lsdp.h) if lsdp.G.size else None,
        Gs=Gs or None,
        hs=hs or None,
    )
    if lsdp.A.size:
        kwargs.update(A=matrix(lsdp.A), b=matrix(lsdp.b))
    options = {
        "show_progress": False,
        "abstol": opts.abstol,
        "reltol": opts.reltol,
        "feastol": opts.feastol,
        "maxiters": opts.max_iters,
    }
    try:
        res = solvers.sdp(matrix(-lsdp.c), options=options, **{k: v for k, v in kwargs.items() if v is not None})
    except (ArithmeticError, ValueError) as exc:
        log.warning("SDP solver failed: %s", exc)
        return SdpSolution(status="numerical-failure", message=str(exc))

    raw = res["status"]
    pinf = _num(res.get("primal infeasibility"))
    dinf = _num(res.get("dual infeasibility"))
    gap = _num(res.get("relative gap"))
    iters = int(res.get("iterations", 0) or 0)
    if raw == "primal infeasible":
        return SdpSolution("infeasible", iterations=iters, message=raw)
    if raw == "dual infeasible":
        return SdpSolution("unbounded", iterations=iters, message=raw)
    if res["x"] is None:
        return SdpSolution("numerical-failure", iterations=iters, message=raw)

    v = np.array(res["x"]).ravel()
    if raw == "optimal":
        status = "optimal"
    elif max(pinf, dinf) <= opts.near_tol and (np.isnan(gap) or gap <= opts.near_tol):
        status = "near-optimal"
        log.warning("SDP solver stopped early; accepting near-optimal point (gap %.2e)", gap)
    else:
        status = "numerical-failure"
    return SdpSolution(
        status=status,
        v=v,
        objective=float(lsdp.c @ v),
        primal_infeasibility=pinf,
        dual_infeasibility=dinf,
        gap=gap,
        iterations=iters,
        message=raw,
    )


def _num(value) -> float:
    return float("nan") if value is None else float(value)


@dataclass(frozen=True)
class Recovery:
    eps: np.ndarray
    lambda_lower: float
    lambda_upper: float
    gap_midgap: float
    x: np.ndarray
    clamp: float


def recover(
    sol: SdpSolution, fsdp: FractionalSdp, theta_min: float = 1e-12, snap: float = 1e-6
) -> Recovery:
    """Undo the homogenization and the TE/TM change of variables.

    The design is clamped into ``eps_bounds``, and values within
    ``snap * (eps_max - eps_min)`` of a bound are put on it (interior-point
    iterates stop just short of active bounds).  ``clamp`` is the largest
    change this caused.
    """
    if not sol.ok or sol.v is None:
        raise ValueError(f"cannot recover a solution with status {sol.status!r}")
    if sol.theta <= theta_min:
        raise DegenerateSolutionError(f"homogenizing variable theta={sol.theta:g} is not positive")
    x = sol.w / sol.theta
    n = fsdp.n_eps
    eps_min, eps_max = fsdp.eps_bounds
    if fsdp.polarization == "TE":
        raw = 1.0 / x[:n]
        lam_l, lam_u = x[n], x[n + 1]
    else:
        raw = x[:n].copy()
        lam_l, lam_u = 1.0 / x[n], 1.0 / x[n + 1]
    eps = np.clip(raw, eps_min, eps_max)
    near = snap * (eps_max - eps_min)
    eps[eps - eps_min <= near] = eps_min
    eps[eps_max - eps <= near] = eps_max
    clamp = float(np.abs(eps - raw).max()) if n else 0.0
    return Recovery(
        eps=eps,
        lambda_lower=float(lam_l),
        lambda_upper=float(lam_u),
        gap_midgap=gap_midgap(lam_l, lam_u),
        x=x,
        clamp=clamp,
    )


def write_problem(lsdp: LinearSdp, path) -> None:
    """Plain-text dump of a linear SDP for replay in other solvers.

    Layout (one record per line, indices 0-based)::

        linear-sdp 1
        variables <n>
        objective <c_0> ... <c_{n-1}>          # maximize c.v
        lmi <index> <size> <label>             # const + sum v_j F_j >= 0
        F <j|const> <row> <col> <value>        # upper triangle, nonzeros only
        inequalities <rows>                    # G v <= h
        G <row> <col> <value>
        h <row> <value>
        equalities <rows>                      # A v = b
        A <row> <col> <value>
        b <row> <value>
        end
    """
    fmt = "{:.17g}".format
    with open(path, "w") as fh:
        fh.write("linear-sdp 1\n")
        fh.write(f"variables {lsdp.n_var}\n")
        fh.write("objective " + " ".join(fmt(v) for v in lsdp.c) + "\n")
        for idx, lmi in enumerate(lsdp.lmis):
            label = lmi.label.replace(" ", "_") or "-"
            fh.write(f"lmi {idx} {lmi.size} {label}\n")
            iu = np.triu_indices(lmi.size)
            for r, c in zip(*iu):
                if lmi.const[r, c] != 0:
                    fh.write(f"F const {r} {c} {fmt(lmi.const[r, c])}\n")
            for j in range(lmi.coeffs.shape[0]):
                block = lmi.coeffs[j]
                for r, c in zip(*iu):
                    if block[r, c] != 0:
                        fh.write(f"F {j} {r} {c} {fmt(block[r, c])}\n")
        for name, mat, vec, rhs in (("inequalities", lsdp.G, lsdp.h, "h"), ("equalities", lsdp.A, lsdp.b, "b")):
            tag = "G" if name == "inequalities" else "A"
            fh.write(f"{name} {mat.shape[0]}\n")
            for r, c in zip(*np.nonzero(mat)):
                fh.write(f"{tag} {r} {c} {fmt(mat[r, c])}\n")
            for r in np.nonzero(vec)[0]:
                fh.write(f"{rhs} {r} {fmt(vec[r])}\n")
        fh.write("end\n")
