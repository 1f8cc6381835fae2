"""kNN affinity graph, graph Laplacian and Laplacian-whitened data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qaop.errors import InvalidInputError, InvalidParameterError
from qaop.numkit import as_matrix, cholesky_lower


@dataclass(frozen=True)
class NeighborGraph:
    weights: np.ndarray  # m x m, entries in {0, 1}
    k_nn: int


def knn_weights(X, k_nn: int) -> NeighborGraph:
    """Symmetric 0/1 kNN graph over the columns of ``X``.

    ``S[i, j] = 1`` when either point is among the other's ``k_nn`` nearest
    neighbors (Euclidean). A point is never its own neighbor, and distance
    ties go to the lower point index.
    """
    X = as_matrix(X, "X")
    m = X.shape[1]
    if not 1 <= k_nn < m:
        raise InvalidParameterError(f"k_nn must satisfy 1 <= k_nn < m={m}, got {k_nn}")
    sq = np.sum(X * X, axis=0)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X.T @ X, 0.0)
    np.fill_diagonal(d2, np.inf)
    S = np.zeros((m, m))
    for j in range(m):
        nearest = np.argsort(d2[:, j], kind="stable")[:k_nn]
        S[nearest, j] = 1.0
    S = np.maximum(S, S.T)
    return NeighborGraph(weights=S, k_nn=k_nn)


def laplacian(G: NeighborGraph) -> np.ndarray:
    S = G.weights
    return np.diag(S.sum(axis=1)) - S


def whiten(X, L, lambda1: float) -> np.ndarray:
    """Return ``X @ Sigma`` where ``Sigma Sigma^T = I + lambda1 * L``."""
    X = as_matrix(X, "X")
    L = as_matrix(L, "L")
    if lambda1 < 0:
        raise InvalidParameterError("lambda1 must be nonnegative")
    m = X.shape[1]
    if L.shape != (m, m):
        raise InvalidInputError(f"L has shape {L.shape}, expected {(m, m)}")
    if lambda1 == 0:
        return X.copy()
    Sigma = cholesky_lower(np.eye(m) + lambda1 * L)
    return X @ Sigma
