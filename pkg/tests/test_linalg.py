import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sepsense.errors import ConvergenceError
from sepsense.linalg import (jacobi_eigh, spectral_interval, spectral_norm, sym_function,
                             sym_sqrt)


def random_symmetric(n, seed):
    X = np.random.default_rng(seed).standard_normal((n, n))
    return X + X.T


symmetric_matrices = st.integers(1, 9).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10))).map(lambda X: X + X.T)


class TestJacobi:
    @pytest.mark.parametrize("n", [1, 2, 3, 8, 17, 40])
    def test_matches_lapack(self, n):
        A = random_symmetric(n, n)
        res = jacobi_eigh(A)
        np.testing.assert_allclose(res.eigenvalues, np.linalg.eigvalsh(A),
                                   atol=1e-12 * np.linalg.norm(A))

    @settings(max_examples=50, deadline=None)
    @given(symmetric_matrices)
    def test_reconstruction_and_orthogonality(self, A):
        w, X, _ = jacobi_eigh(A)
        scale = max(np.linalg.norm(A), 1.0)
        np.testing.assert_allclose(X.T @ X, np.eye(len(w)), atol=1e-12)
        np.testing.assert_allclose((X * w) @ X.T, A, atol=1e-11 * scale)
        assert np.all(np.diff(w) >= 0)

    def test_diagonal_needs_no_sweep(self):
        res = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
        assert res.sweeps == 0
        np.testing.assert_array_equal(res.eigenvalues, [-1.0, 2.0, 3.0])

    def test_known_spectrum_of_path_laplacian(self):
        n = 12
        L = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        k = np.arange(1, n + 1)
        expected = 2 - 2 * np.cos(k * np.pi / (n + 1))
        np.testing.assert_allclose(jacobi_eigh(L).eigenvalues, expected, atol=1e-13)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_sweep_limit(self):
        with pytest.raises(ConvergenceError):
            jacobi_eigh(random_symmetric(10, 0), max_sweeps=1)

    def test_graded_entries(self):
        # widely varying magnitudes stress the stopping rule
        A = np.diag(10.0 ** np.arange(-6, 7))
        A += 1e-3 * np.eye(13, k=1) + 1e-3 * np.eye(13, k=-1)
        np.testing.assert_allclose(jacobi_eigh(A).eigenvalues, np.linalg.eigvalsh(A),
                                   atol=1e-12 * np.linalg.norm(A))


class TestSpectralInterval:
    def test_jacobi_is_exact(self):
        A = random_symmetric(10, 1)
        w = np.linalg.eigvalsh(A)
        np.testing.assert_allclose(spectral_interval(A), (w[0], w[-1]), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(symmetric_matrices)
    def test_gershgorin_contains_spectrum(self, A):
        a, b = spectral_interval(A, "gershgorin")
        w = np.linalg.eigvalsh(A)
        tol = 1e-12 * max(np.abs(A).max(), 1.0)
        assert a <= w[0] + tol and w[-1] <= b + tol

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            spectral_interval(np.eye(2), "power")


class TestMatrixFunctions:
    def test_sqrt_squares_back(self):
        X = np.random.default_rng(2).standard_normal((8, 8))
        M = X @ X.T
        S = sym_sqrt(M)
        np.testing.assert_allclose(S @ S, M, atol=1e-11)
        np.testing.assert_allclose(S, S.T, atol=0)
        assert np.all(np.linalg.eigvalsh(S) >= -1e-12)

    def test_sqrt_clamps_tiny_negatives(self):
        M = np.diag([1.0, -1e-15])
        np.testing.assert_allclose(sym_sqrt(M), np.diag([1.0, 0.0]))

    def test_sqrt_rejects_indefinite(self):
        with pytest.raises(ValueError):
            sym_sqrt(np.diag([1.0, -0.5]))

    def test_exponential_against_series(self):
        A = 0.3 * random_symmetric(5, 3)
        E = sym_function(A, np.exp)
        series, term = np.eye(5), np.eye(5)
        for k in range(1, 40):
            term = term @ A / k
            series = series + term
        np.testing.assert_allclose(E, series, atol=1e-12)


class TestSpectralNorm:
    @pytest.mark.parametrize("shape", [(6, 6), (4, 9), (9, 4)])
    def test_matches_svd(self, shape):
        M = np.random.default_rng(4).standard_normal(shape)
        np.testing.assert_allclose(spectral_norm(M), np.linalg.norm(M, 2), rtol=1e-8)

    def test_nonnegative_matrix(self):
        M = np.abs(np.random.default_rng(5).standard_normal((20, 20)))
        np.testing.assert_allclose(spectral_norm(M), np.linalg.norm(M, 2), rtol=1e-10)

    def test_zero(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0
        assert spectral_norm(np.zeros((0, 0))) == 0.0
