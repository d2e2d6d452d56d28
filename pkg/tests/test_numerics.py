import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sst_track.numerics import (
    DimensionError,
    NonFiniteError,
    RankDeficientError,
    least_squares_solve,
    qr_orthonormalize,
    small_eigenvalues,
)


def classical_gram_schmidt(M):
    """Textbook CGS, column by column, no reorthogonalization."""
    n, r = M.shape
    Q = np.zeros((n, r), dtype=complex if np.iscomplexobj(M) else float)
    for j in range(r):
        v = M[:, j].astype(Q.dtype)
        for i in range(j):
            v = v - np.vdot(Q[:, i], M[:, j]) * Q[:, i]
        Q[:, j] = v / np.linalg.norm(v)
    return Q


def char_poly_roots(P):
    """Eigenvalues via Faddeev-LeVerrier coefficients and mpmath's polynomial root finder."""
    mpmath.mp.dps = 40
    n = P.shape[0]
    A = mpmath.matrix([[mpmath.mpc(complex(P[i, j])) for j in range(n)] for i in range(n)])
    I = mpmath.eye(n)
    coeffs = [mpmath.mpc(1)]
    Mk = mpmath.zeros(n, n)
    for k in range(1, n + 1):
        Mk = A * Mk + coeffs[-1] * I
        AM = A * Mk
        c = -sum(AM[i, i] for i in range(n)) / k
        coeffs.append(c)
    roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    return np.array([complex(z) for z in roots])


def match_multiset(a, b):
    best = min(itertools.permutations(range(len(b))), key=lambda p: np.abs(a - b[list(p)]).max())
    return np.abs(a - b[list(best)]).max()


def principal_angles(A, B):
    # sines of the angles, from the part of span(B) outside span(A); accurate near zero
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(Qb - Qa @ (Qa.conj().T @ Qb), compute_uv=False)
    return np.arcsin(np.clip(s, 0, 1))


class TestQR:
    def test_identity(self):
        Q, deficient = qr_orthonormalize(np.eye(3))
        np.testing.assert_array_equal(Q, np.eye(3))
        assert deficient is False

    def test_rank_one_columns(self):
        x = np.array([1.0, 0.0, 0.0])
        Q, deficient = qr_orthonormalize(np.column_stack([x, 2 * x]))
        assert deficient is True
        assert abs(abs(Q[0, 0]) - 1.0) < 1e-15
        assert np.linalg.norm(Q.T @ Q - np.eye(2)) < 1e-12

    def test_completion_is_deterministic_and_skips_spanned_directions(self):
        Q, deficient = qr_orthonormalize(np.zeros((4, 2)))
        assert deficient
        np.testing.assert_array_equal(Q, np.eye(4)[:, :2])
        # e_1 is already spanned, so completion takes e_2
        M = np.zeros((3, 2))
        M[0, 0] = 5.0
        Q, _ = qr_orthonormalize(M)
        np.testing.assert_array_equal(Q, np.eye(3)[:, :2])

    def test_random_against_classical_gram_schmidt(self):
        M = np.random.default_rng(0).standard_normal((6, 3))
        Q, deficient = qr_orthonormalize(M)
        assert not deficient
        assert np.linalg.norm(Q.conj().T @ Q - np.eye(3)) < 1e-12
        assert np.linalg.norm(M - Q @ (Q.conj().T @ M)) < 1e-10
        np.testing.assert_allclose(Q, classical_gram_schmidt(M), atol=1e-12)

    def test_complex_against_classical_gram_schmidt(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
        Q, _ = qr_orthonormalize(M)
        assert np.linalg.norm(Q.conj().T @ Q - np.eye(3)) < 1e-12
        np.testing.assert_allclose(Q, classical_gram_schmidt(M), atol=1e-12)

    def test_errors(self):
        with pytest.raises(DimensionError):
            qr_orthonormalize(np.ones((2, 3)))
        with pytest.raises(NonFiniteError):
            qr_orthonormalize(np.array([[1.0], [np.nan]]))

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, (8, 3), elements=st.floats(-10, 10)),
        st.floats(1e-6, 1e6) | st.floats(-1e6, -1e-6),
    )
    def test_span_scale_invariance(self, M, c):
        Q1, d1 = qr_orthonormalize(M)
        Q2, d2 = qr_orthonormalize(c * M)
        if d1 or d2 or np.linalg.cond(M) > 1e6:
            return
        assert principal_angles(Q1, Q2).max() <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (8, 3), elements=st.floats(-10, 10)), st.integers(0, 7))
    def test_zero_rows_stay_zero(self, M, row):
        M = M.copy()
        M[row] = 0.0
        Q, deficient = qr_orthonormalize(M)
        if not deficient:
            assert np.all(Q[row] == 0.0)


class TestEigenvalues:
    def test_diagonal(self):
        vals = small_eigenvalues(np.diag([2.0, 3j]))
        assert match_multiset(vals, np.array([2.0, 3j])) < 1e-14

    def test_swap(self):
        vals = small_eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert match_multiset(vals, np.array([1.0, -1.0])) < 1e-14

    def test_random_against_characteristic_polynomial(self):
        rng = np.random.default_rng(4)
        P = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        vals = small_eigenvalues(P)
        oracle = char_poly_roots(P)
        assert match_multiset(vals, oracle) < 1e-8
        # residual check with eigenvectors from the nullspace of P - lambda I
        for lam in vals:
            _, s, vh = np.linalg.svd(P - lam * np.eye(4))
            v = vh[-1].conj()
            assert np.linalg.norm(P @ v - lam * v) / np.linalg.norm(P) <= 1e-8

    def test_size_limit(self):
        with pytest.raises(DimensionError):
            small_eigenvalues(np.eye(65))
        with pytest.raises(DimensionError):
            small_eigenvalues(np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (5, 5), elements=st.floats(-5, 5)), arrays(np.float64, (5, 5), elements=st.floats(-5, 5)))
    def test_hermitian_has_real_spectrum(self, X, Y):
        G = X + 1j * Y
        P = G + G.conj().T
        vals = small_eigenvalues(P.conj().T)
        assert np.abs(vals.imag).max() <= 1e-8 * max(1.0, np.linalg.norm(P))


class TestLeastSquares:
    def test_identity_system(self):
        B = np.arange(6.0).reshape(3, 2)
        np.testing.assert_allclose(least_squares_solve(np.eye(3), B), B, atol=1e-15)

    def test_mean_of_two(self):
        X = least_squares_solve(np.array([[1.0], [1.0]]), np.array([[1.0], [3.0]]))
        assert X.shape == (1, 1)
        assert abs(X[0, 0] - 2.0) < 1e-14

    def test_consistent_system(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((8, 3))
        X_star = rng.standard_normal((3, 2))
        X = least_squares_solve(A, A @ X_star)
        np.testing.assert_allclose(X, X_star, atol=1e-10)

    def test_stationarity_inconsistent_complex(self):
        rng = np.random.default_rng(8)
        A = rng.standard_normal((9, 3)) + 1j * rng.standard_normal((9, 3))
        B = rng.standard_normal((9, 2)) + 1j * rng.standard_normal((9, 2))
        X = least_squares_solve(A, B)
        grad = A.conj().T @ (A @ X - B)
        assert np.linalg.norm(grad) <= 1e-8 * np.linalg.norm(A) * np.linalg.norm(B)
        np.testing.assert_allclose(X, np.linalg.lstsq(A, B, rcond=None)[0], atol=1e-10)

    def test_vector_rhs(self):
        x = least_squares_solve(np.eye(2), np.array([3.0, 4.0]))
        assert x.shape == (2,)

    def test_rank_deficient(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(RankDeficientError):
            least_squares_solve(A, np.ones((3, 1)))

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (7, 3), elements=st.floats(-10, 10)))
    def test_self_solve_is_identity(self, A):
        if np.linalg.cond(A) > 1e4:
            return
        np.testing.assert_allclose(least_squares_solve(A, A), np.eye(3), atol=1e-10)
