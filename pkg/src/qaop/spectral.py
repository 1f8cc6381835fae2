"""Closed-form AOP: the projection is carried as scalar gains on fixed
singular directions of the whitened data, and each iteration updates only
those gains.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from qaop.errors import InvalidStateError, RankDeficiencyError
from qaop.numkit import SvdFactors, svd


@dataclass(frozen=True)
class SpectralModel:
    svd: SvdFactors
    k: int
    beta: np.ndarray
    iteration: int
    lambda2: float

    @property
    def sigma(self) -> np.ndarray:
        return self.svd.sigma[: self.k]

    @property
    def U(self) -> np.ndarray:
        return self.svd.U[:, : self.k]

    @property
    def V(self) -> np.ndarray:
        return self.svd.V[:, : self.k]

    @property
    def trace(self) -> float:
        """``tr(A A^T) = sum(beta**2)``."""
        return float(np.sum(self.beta**2))


def init_spectral(Xt, k: int, lambda2: float = 1e-3) -> SpectralModel:
    f = svd(Xt)
    if k < 1 or k > f.rank:
        raise RankDeficiencyError(
            f"requested k={k} but numerical rank is {f.rank}", deficient=max(k - f.rank, 0)
        )
    return SpectralModel(svd=f, k=k, beta=np.ones(k), iteration=0, lambda2=lambda2)


def beta_update(sigma, beta, lambda2: float) -> np.ndarray:
    """``((sigma*beta)**2 + lambda2) / (sigma**2 * beta)`` elementwise."""
    sigma = np.asarray(sigma, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(sigma == 0) or np.any(beta == 0):
        raise ZeroDivisionError("beta update needs nonzero sigma and beta")
    return ((sigma * beta) ** 2 + lambda2) / (sigma**2 * beta)


def beta_step(model: SpectralModel) -> SpectralModel:
    beta = beta_update(model.sigma, model.beta, model.lambda2)
    return replace(model, beta=beta, iteration=model.iteration + 1)


def fit_spectral(Xt, k: int, lambda2: float, s: int) -> list[SpectralModel]:
    if s < 0:
        raise ValueError("s must be nonnegative")
    models = [init_spectral(Xt, k, lambda2)]
    for _ in range(s):
        models.append(beta_step(models[-1]))
    return models


def assemble_projection(model: SpectralModel) -> np.ndarray:
    """The n x k projection matrix with columns ``beta_j u_j``."""
    return model.U * model.beta


def target_state(model: SpectralModel) -> np.ndarray:
    """Unit vector ``sum_j beta_j u_j (x) v_j / ||beta||`` of length n*m.

    Index ``i*m + l`` holds the coefficient of ``|i>|l>``.
    """
    norm = np.linalg.norm(model.beta)
    if norm == 0:
        raise InvalidStateError("model has zero beta")
    M = (model.U * model.beta) @ model.V.T
    return M.ravel() / norm


def index_state(model: SpectralModel) -> np.ndarray:
    """Unit vector ``sum_j beta_j u_j (x) |j>`` of length n*k (vectorized A)."""
    return assemble_projection(model).ravel() / np.linalg.norm(model.beta)


def density(model: SpectralModel) -> np.ndarray:
    """``A A^T / tr(A A^T)``."""
    A = assemble_projection(model)
    return A @ A.T / model.trace
