"""Dense real linear algebra primitives.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64; the
helpers here validate them and provide the factorizations the rest of the
package relies on (SVD with a deterministic sign convention, Cholesky with
pivot reporting, truncated PCA bases).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from qaop.errors import DecompositionError, InvalidInputError, RankDeficiencyError

DEGENERACY_RTOL = 1e-9
DEFAULT_CUTOFF_RTOL = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite float64 2-D array or raise InvalidInputError."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = U diag(sigma) V^T`` truncated to the numerical rank."""

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    rank: int
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of each left vector made positive; the right
    # vector is flipped with it so the product is unchanged.
    if U.shape[1] == 0:
        return U, V
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def svd(M, rank_cutoff: float | None = None) -> SvdFactors:
    """Thin SVD with singular values at or below ``rank_cutoff`` discarded.

    The default cutoff is ``1e-12`` times the largest singular value.
    Adjacent singular values within ``1e-9`` relative of each other mark the
    factorization as degenerate; callers should then compare subspace
    projectors instead of individual columns.
    """
    M = as_matrix(M)
    if rank_cutoff is not None and rank_cutoff < 0:
        raise InvalidInputError("rank_cutoff must be nonnegative")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if rank_cutoff is None:
        rank_cutoff = DEFAULT_CUTOFF_RTOL * (s[0] if s.size else 0.0)
    r = int(np.sum(s > rank_cutoff))
    U, V = _fix_signs(U[:, :r], Vt[:r].T)
    s = s[:r]
    degenerate = bool(np.any(s[:-1] - s[1:] <= DEGENERACY_RTOL * s[:-1])) if r > 1 else False
    return SvdFactors(U=U, V=V, sigma=s, rank=r, degenerate=degenerate)


def cholesky_lower(M) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == M`` for symmetric positive definite ``M``.

    Raises DecompositionError carrying the (0-based) index of the first
    nonpositive pivot.
    """
    M = as_matrix(M)
    n, m = M.shape
    if n != m:
        raise InvalidInputError(f"cholesky needs a square matrix, got {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise InvalidInputError("cholesky needs a symmetric matrix")
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - L[j, :j] @ L[j, :j]
        if d <= 0.0:
            raise DecompositionError(j, float(d))
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def spd_solve(M, rhs) -> np.ndarray:
    """Solve ``M X = rhs`` for SPD ``M`` through its Cholesky factor."""
    L = cholesky_lower(M)
    y = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, y, lower=False)


def pca_basis(M, k: int) -> np.ndarray:
    """The first ``k`` left singular vectors of ``M`` as an n x k matrix."""
    f = svd(M)
    if k < 1 or k > f.rank:
        raise RankDeficiencyError(
            f"requested k={k} but numerical rank is {f.rank}", deficient=max(k - f.rank, 0)
        )
    return f.U[:, :k].copy()


def projector(A: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of ``A``."""
    Q, _ = np.linalg.qr(A)
    return Q @ Q.T


def projector_distance(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(projector(A) - projector(B)))
