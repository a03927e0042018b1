"""Lowest eigenpairs of the Hermitian pencil ``A u = lambda M u``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# Largest problem solved with a dense Hermitian eigensolver.
DENSE_LIMIT = 4096
RESIDUAL_TOL = 1e-8


class NumericalError(ArithmeticError):
    """Raised when a factorization or eigensolve breaks down."""


@dataclass(frozen=True)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    residual_norms: np.ndarray = field(repr=False)
    k: np.ndarray | None = None

    @property
    def n_pairs(self) -> int:
        return self.eigenvalues.size


def _dense(mat) -> np.ndarray:
    return mat.toarray() if sp.issparse(mat) else np.asarray(mat)


def _rayleigh_ritz(A, M, basis: np.ndarray, m_max: int):
    """Project onto ``basis``, M-orthonormalize, and return the lowest Ritz pairs."""
    gram = basis.conj().T @ (M @ basis)
    gram = 0.5 * (gram + gram.conj().T)
    red = basis.conj().T @ (A @ basis)
    red = 0.5 * (red + red.conj().T)
    vals, coeffs = sla.eigh(red, gram)
    return vals[:m_max], basis @ coeffs[:, :m_max]


def solve_gevp(A, M, m_max: int, method: str = "auto", k=None) -> EigenSolution:
    """The ``m_max`` algebraically smallest eigenpairs of ``(A, M)``.

    Eigenvalues are ascending and the eigenvectors M-orthonormal.  ``method`` is
    ``"dense"``, ``"sparse"`` (shift-invert Lanczos) or ``"auto"``, which picks the
    dense solver up to :data:`DENSE_LIMIT` unknowns.
    """
    n = A.shape[0]
    if A.shape != (n, n) or M.shape != (n, n):
        raise ValueError(f"A and M must be square of the same size, got {A.shape}, {M.shape}")
    if isinstance(m_max, bool) or int(m_max) != m_max or not 1 <= m_max <= n:
        raise ValueError(f"m_max must be an integer in [1, {n}], got {m_max!r}")
    m_max = int(m_max)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "sparse"

    if method == "dense":
        Ad, Md = _dense(A), _dense(M)
        try:
            vals, vecs = sla.eigh(Ad, Md, subset_by_index=(0, m_max - 1))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"generalized eigensolve failed: {exc}") from exc
    elif method == "sparse":
        vals, vecs = _shift_invert(A, M, m_max)
    else:
        raise ValueError(f"unknown method {method!r}")

    residuals = np.linalg.norm(A @ vecs - (M @ vecs) * vals, axis=0)
    return EigenSolution(
        eigenvalues=np.asarray(vals, dtype=float),
        eigenvectors=vecs,
        residual_norms=residuals,
        k=None if k is None else np.asarray(k, dtype=float),
    )


def _shift_invert(A, M, m_max: int):
    A = sp.csc_matrix(A)
    M = sp.csc_matrix(M)
    n = A.shape[0]
    # A is PSD, so a small negative shift keeps A - sigma M definite.
    scale = abs(A.diagonal()).max() / max(abs(M.diagonal()).max(), 1e-300)
    sigma = -1e-3 * scale
    n_req = min(n - 2, m_max + 4)
    try:
        _, vecs = spla.eigs(A, k=n_req, M=M, sigma=sigma, which="LM", tol=1e-12)
    except (RuntimeError, spla.ArpackError) as exc:
        raise NumericalError(f"shift-invert eigensolve failed: {exc}") from exc
    # Ritz refinement restores exact M-orthonormality inside degenerate clusters.
    q, _ = np.linalg.qr(vecs)
    try:
        return _rayleigh_ritz(A, M, q, m_max)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Ritz refinement failed: {exc}") from exc
