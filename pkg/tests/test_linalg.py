import numpy as np
import pytest

from zeroradius import (gsvd_values, nullspace_basis, rank_with_tol,
                        real_lift, real_lift_solve)
from zeroradius.linalg import gsvd_right_vector, spectral_norm


class TestRealLift:
    def test_real_matrix_gives_block_diagonal(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        L = real_lift(1.0, M)
        assert np.allclose(L, np.block([[M, np.zeros((2, 2))],
                                        [np.zeros((2, 2)), M]]))

    def test_pure_imaginary_scalar(self):
        L = real_lift(0.5, np.array([[1j]]))
        assert np.allclose(L, [[0.0, -0.5], [2.0, 0.0]])

    @pytest.mark.parametrize("gamma", [0.0, -0.3, 1.5])
    def test_gamma_domain(self, gamma):
        with pytest.raises(ValueError):
            real_lift(gamma, np.eye(2))

    def test_real_input_doubles_singular_values(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((4, 3))
        for gamma in (1.0, 0.25, 1e-3):
            got = np.sort(np.linalg.svd(real_lift(gamma, M), compute_uv=False))
            want = np.sort(np.repeat(np.linalg.svd(M, compute_uv=False), 2))
            assert np.allclose(got, want, rtol=1e-12)

    def test_conjugation_leaves_singular_values(self):
        # the sign convention of the imaginary block is immaterial up to
        # conjugation of the input
        rng = np.random.default_rng(9)
        M = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        a = np.linalg.svd(real_lift(0.3, M), compute_uv=False)
        b = np.linalg.svd(real_lift(0.3, M.conj()), compute_uv=False)
        assert np.allclose(a, b, rtol=1e-12)


class TestGsvd:
    def test_identity_second_factor_reduces_to_svd(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            M = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
            got = gsvd_values(M, np.eye(3)).values
            want = np.linalg.svd(M, compute_uv=False)
            assert np.allclose(got, want, rtol=1e-12)

    def test_equal_square_factors_give_ones(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((3, 3)) + np.eye(3)
        vals = gsvd_values(M, M).values
        assert np.allclose(vals, 1.0, rtol=1e-10)

    def test_matches_pencil_eigenvalues(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            M = rng.standard_normal((4, 2))
            N = rng.standard_normal((2, 2)) + 2 * np.eye(2)
            got = np.sort(gsvd_values(M, N).values)
            import scipy.linalg as sla
            eig = sla.eigvals(M.T @ M, N.T @ N)
            want = np.sort(np.sqrt(np.abs(eig.real)))
            assert np.allclose(got, want, rtol=1e-8)

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            gsvd_values(np.eye(3), np.eye(2))

    def test_zero_second_factor_reports_inf(self):
        res = gsvd_values(np.eye(2), np.zeros((2, 2)))
        assert np.all(np.isinf(res.values))
        assert res.finite_count == 0

    def test_values_sorted_nonincreasing(self):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((5, 3))
        N = rng.standard_normal((2, 3))
        vals = gsvd_values(M, N).values
        assert np.all(np.diff(vals) <= 0)
        assert np.all(vals >= 0)

    def test_extreme_scale_ratio(self):
        # answer spans ~230 orders of magnitude; the normalized c/s route
        # must keep full relative accuracy
        M = np.array([[1e77]])
        N = np.array([[1e-153]])
        vals = gsvd_values(M, N).values
        assert vals[0] == pytest.approx(1e230, rel=1e-12)

    def test_right_vector_solves_pencil(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((4, 3))
        N = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        for sigma in gsvd_values(M, N).values:
            x = gsvd_right_vector(M, N, sigma)
            resid = (M.T @ M - sigma ** 2 * N.T @ N) @ x
            assert np.linalg.norm(resid) < 1e-6 * (np.linalg.norm(M) ** 2
                                                   + sigma ** 2 * np.linalg.norm(N) ** 2)


class TestNullspace:
    def test_full_rank_empty(self):
        assert nullspace_basis(np.eye(2)).shape == (2, 0)

    def test_rank_one_row(self):
        Q = nullspace_basis(np.array([[1.0, 1.0]]))
        assert Q.shape == (2, 1)
        v = Q[:, 0]
        assert abs(abs(v[0]) - 1 / np.sqrt(2)) < 1e-12
        assert abs(v[0] + v[1]) < 1e-12

    def test_orthonormal_and_annihilated(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            M = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
            Q = nullspace_basis(M)
            assert Q.shape[1] == 2
            assert np.linalg.norm(M @ Q) <= 1e-10 * np.linalg.norm(M)
            assert np.allclose(Q.conj().T @ Q, np.eye(2), atol=1e-12)


class TestRank:
    def test_identity(self):
        assert rank_with_tol(np.eye(3), 1e-10) == 3

    def test_zero(self):
        assert rank_with_tol(np.zeros((2, 4))) == 0

    def test_tol_positive(self):
        with pytest.raises(ValueError):
            rank_with_tol(np.eye(2), 0.0)


class TestRealLiftSolve:
    def test_real_identity_action(self):
        X = np.array([1.0, 2.0, -1.0])
        D = real_lift_solve(X, X)
        assert np.allclose(D @ X, X, atol=1e-12)

    def test_zero_target(self):
        D = real_lift_solve(np.zeros(3), np.array([1.0 + 1j, 0, 0]))
        assert np.allclose(D, 0.0)

    def test_zero_direction_rejected(self):
        with pytest.raises(ValueError, match="no perturbation direction"):
            real_lift_solve(np.ones(2), np.zeros(2))

    def test_exact_mapping_when_solvable(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            X = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            D0 = rng.standard_normal((2, 3))
            Y = D0 @ X
            D = real_lift_solve(Y, X)
            RX = np.column_stack([X.real, X.imag])
            RY = np.column_stack([Y.real, Y.imag])
            assert np.linalg.norm(D @ RX - RY) <= 1e-10 * max(np.linalg.norm(RY), 1e-12)
            assert spectral_norm(D) <= spectral_norm(D0) + 1e-10
