
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qaop.errors import DecompositionError, InvalidInputError, RankDeficiencyError
from qaop.numkit import (
    as_matrix,
    cholesky_lower,
    pca_basis,
    projector,
    projector_distance,
    spd_solve,
    svd,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestAsMatrix:
    def test_rejects_nan(self):
        with pytest.raises(InvalidInputError):
            as_matrix(np.array([[1.0, np.nan]]))

    def test_rejects_vector(self):
        with pytest.raises(InvalidInputError):
            as_matrix(np.ones(3))


class TestSvd:
    def test_diagonal(self):
        f = svd(np.diag([3.0, 2.0]))
        np.testing.assert_allclose(f.sigma, [3, 2])
        np.testing.assert_allclose(f.U, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(f.V, np.eye(2), atol=1e-15)

    def test_rank_one(self):
        f = svd(np.ones((2, 2)))
        assert f.rank == 1
        np.testing.assert_allclose(f.sigma, [2.0])
        np.testing.assert_allclose(f.U[:, 0], [2**-0.5, 2**-0.5])

    def test_zero_matrix_has_rank_zero(self):
        assert svd(np.zeros((3, 3))).rank == 0

    def test_degenerate_flag(self):
        assert svd(np.eye(3)).degenerate
        assert not svd(np.diag([3.0, 2.0, 1.0])).degenerate

    def test_sign_rule(self, rng):
        f = svd(rng.standard_normal((6, 4)))
        for j in range(f.rank):
            u = f.U[:, j]
            assert u[np.argmax(np.abs(u))] > 0

    def test_custom_cutoff(self):
        f = svd(np.diag([1.0, 1e-3]), rank_cutoff=1e-2)
        assert f.rank == 1

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
    def test_reconstruction(self, M):
        f = svd(M)
        assert np.linalg.norm(f.reconstruct() - M) <= 1e-9 * max(1.0, np.linalg.norm(M))
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(f.rank), atol=1e-10)
        np.testing.assert_allclose(f.V.T @ f.V, np.eye(f.rank), atol=1e-10)
        assert np.all(np.diff(f.sigma) <= 0)


class TestCholesky:
    def test_two_by_two(self):
        L = cholesky_lower(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(L, [[2, 0], [1, np.sqrt(2)]])

    def test_identity(self):
        np.testing.assert_array_equal(cholesky_lower(np.eye(4)), np.eye(4))

    def test_indefinite_reports_pivot(self):
        with pytest.raises(DecompositionError) as exc:
            cholesky_lower(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert exc.value.pivot == 1

    def test_asymmetric(self):
        with pytest.raises(InvalidInputError):
            cholesky_lower(np.array([[1.0, 0.5], [0.0, 1.0]]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**31))
    def test_matches_numpy(self, n, seed):
        r = np.random.default_rng(seed)
        B = r.standard_normal((n, n))
        M = B @ B.T + n * np.eye(n)
        L = cholesky_lower(M)
        np.testing.assert_allclose(L, np.linalg.cholesky(M), rtol=1e-10, atol=1e-12)
        assert np.allclose(np.triu(L, 1), 0)

    def test_spd_solve(self, rng):
        B = rng.standard_normal((5, 5))
        M = B @ B.T + np.eye(5)
        rhs = rng.standard_normal((5, 2))
        np.testing.assert_allclose(M @ spd_solve(M, rhs), rhs, atol=1e-10)


class TestPcaAndProjector:
    def test_pca_basis_orthonormal(self, rng):
        A = pca_basis(rng.standard_normal((6, 10)), 3)
        np.testing.assert_allclose(A.T @ A, np.eye(3), atol=1e-12)

    def test_pca_rank_deficient(self):
        with pytest.raises(RankDeficiencyError) as exc:
            pca_basis(np.ones((3, 3)), 2)
        assert exc.value.deficient == 1

    def test_projector_idempotent(self, rng):
        P = projector(rng.standard_normal((5, 2)))
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
        assert np.trace(P) == pytest.approx(2)

    def test_projector_distance_scale_invariant(self, rng):
        A = rng.standard_normal((5, 2))
        assert projector_distance(A, A @ np.diag([3.0, -0.5])) < 1e-12
