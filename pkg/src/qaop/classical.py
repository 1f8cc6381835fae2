"""The original alternating A-Optimal Projection learner.

Each iteration solves for the auxiliary matrix ``B`` with ``A`` fixed, then
for ``A`` with ``B`` fixed, optionally rescaling ``A`` into the Frobenius
ball of radius ``rho0``. This is the slow, direct path that the spectral and
quantum paths are checked against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from qaop.errors import InvalidParameterError, InvalidStateError, RankDeficiencyError
from qaop.errors import ConditioningWarning, DecompositionError
from qaop.numkit import as_matrix, pca_basis, spd_solve

DEFAULT_LAMBDA2 = 1e-3
DEFAULT_RHO0 = 10.0
CONDITION_LIMIT = 1e14


@dataclass(frozen=True)
class AopState:
    A: np.ndarray
    B: np.ndarray | None  # None before the first B-update
    iteration: int
    lambda2: float
    rho0: float | None

    @property
    def beta(self) -> np.ndarray:
        """Column norms of ``A``; the per-direction scales."""
        return np.linalg.norm(self.A, axis=0)


def update_B(Xt, A, lambda2: float) -> np.ndarray:
    """Minimize the auxiliary objective over ``B`` for fixed ``A``.

    Solves ``(Xt^T A A^T Xt + lambda2 I) B = Xt^T A`` by Cholesky. Emits a
    ConditioningWarning when the system's condition number exceeds 1e14.
    """
    Xt = as_matrix(Xt, "Xt")
    A = as_matrix(A, "A")
    if lambda2 <= 0:
        raise InvalidParameterError("update_B needs lambda2 > 0")
    XtA = Xt.T @ A
    M = XtA @ XtA.T + lambda2 * np.eye(Xt.shape[1])
    cond = np.linalg.cond(M)
    if cond > CONDITION_LIMIT:
        warnings.warn(f"B-system condition number {cond:.2e}", ConditioningWarning, stacklevel=2)
    return spd_solve(M, XtA)


def update_A(Xt, B) -> np.ndarray:
    """Minimize the auxiliary objective over ``A`` for fixed ``B``.

    With ``M = Xt B`` (n x k) the closed form ``(M M^T)^{-1} M`` only makes
    sense on the range of ``M``; there it equals ``M (M^T M)^{-1}``, computed
    here as ``Q R^{-T}`` from a thin QR of ``M``.
    """
    Xt = as_matrix(Xt, "Xt")
    B = as_matrix(B, "B")
    M = Xt @ B
    k = M.shape[1]
    Q, R = np.linalg.qr(M)
    diag = np.abs(np.diag(R))
    tol = max(M.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    deficient = int(np.sum(diag <= tol))
    if deficient or diag.size == 0:
        raise RankDeficiencyError(
            f"Xt @ B is rank deficient: {deficient} of {k} columns dependent", deficient=deficient
        )
    return np.linalg.solve(R, Q.T).T


def normalize_A(A, rho0: float) -> np.ndarray:
    A = as_matrix(A, "A")
    if rho0 <= 0:
        raise InvalidParameterError("rho0 must be positive")
    norm = np.linalg.norm(A)
    if norm <= rho0:
        return A
    return A * (rho0 / norm)


def _direction(beta: np.ndarray) -> np.ndarray:
    return beta / np.linalg.norm(beta)


def fit_iterative(
    Xt,
    k: int,
    lambda2: float = DEFAULT_LAMBDA2,
    rho0: float | None = None,
    max_iter: int = 100,
    tol: float = 0.0,
) -> list[AopState]:
    """Run the alternating updates from the PCA basis of ``Xt``.

    Stops after ``max_iter`` iterations or once the normalized column-norm
    vector moves by less than ``tol``. ``rho0=None`` skips the Frobenius
    normalization so the trajectory can be compared with the closed form.
    """
    Xt = as_matrix(Xt, "Xt")
    A = pca_basis(Xt, k)
    states = [AopState(A=A, B=None, iteration=0, lambda2=lambda2, rho0=rho0)]
    for i in range(1, max_iter + 1):
        B = update_B(Xt, A, lambda2)
        A = update_A(Xt, B)
        if rho0 is not None:
            A = normalize_A(A, rho0)
        state = AopState(A=A, B=B, iteration=i, lambda2=lambda2, rho0=rho0)
        prev = states[-1]
        states.append(state)
        if np.linalg.norm(_direction(state.beta) - _direction(prev.beta)) < tol:
            break
    return states


def objective(A, X, L, lambda1: float, lambda2: float) -> float:
    """``Tr((A^T X (I + lambda1 L) X^T A + lambda2 I)^{-1})``."""
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    L = as_matrix(L, "L")
    XtA = X.T @ A
    inner = XtA.T @ (XtA + lambda1 * (L @ XtA)) + lambda2 * np.eye(A.shape[1])
    inner = 0.5 * (inner + inner.T)
    try:
        inv = spd_solve(inner, np.eye(A.shape[1]))
    except DecompositionError as exc:
        raise InvalidStateError(f"objective inner matrix is not positive definite ({exc})") from exc
    return float(np.trace(inv))


def objective_aux(A, B, Xt, lambda2: float) -> float:
    """``||I - A^T Xt B||_F^2 + lambda2 ||B||_F^2``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    Xt = as_matrix(Xt, "Xt")
    R = np.eye(A.shape[1]) - A.T @ Xt @ B
    return float(np.sum(R * R) + lambda2 * np.sum(B * B))
