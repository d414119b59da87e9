import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from qmanopt import linalg
from qmanopt.errors import ConstraintError, DimensionError, ParseError


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_sym_skew_split(n, seed):
    A = np.random.default_rng(seed).standard_normal((n, n))
    S, K = linalg.split_sym_skew(A)
    assert_allclose(S + K, A, atol=1e-15)
    assert_allclose(S, S.T)
    assert_allclose(K, -K.T)


def test_comm_anticomm(rng):
    A, B = rng.standard_normal((2, 5, 5))
    assert_allclose(linalg.comm(A, B), A @ B - B @ A)
    assert_allclose(linalg.anticomm(A, B), A @ B + B @ A)
    assert_allclose(linalg.comm(A, A), 0.0, atol=1e-14)


def test_expm_skew_matches_scipy(rng):
    L = linalg.random_skew(7, rng)
    U = linalg.expm_skew(L, 0.7)
    assert_allclose(U, expm(0.7 * L), atol=1e-13)
    assert_allclose(U.T @ U, np.eye(7), atol=1e-13)
    # independent oracle: iL is Hermitian, so exp(tL) = V exp(-i t w) V^H
    w, V = np.linalg.eigh(1j * L)
    assert_allclose(U, ((V * np.exp(-0.7j * w)) @ V.conj().T).real, atol=1e-13)


def test_expm_skew_rejects_symmetric(rng):
    with pytest.raises(ConstraintError):
        linalg.expm_skew(linalg.random_symmetric(4, rng))


def test_vectorize_column_major():
    X = np.arange(6.0).reshape(2, 3)
    v = linalg.vectorize(X)
    assert_allclose(v, [0, 3, 1, 4, 2, 5])
    assert_allclose(linalg.unvectorize(v, 2, 3), X)
    with pytest.raises(DimensionError):
        linalg.unvectorize(v, 4, 2)


def test_kron_vec_identity(rng):
    # vec(A X B) = (B^T kron A) vec(X)
    A, X, B = rng.standard_normal((3, 4, 4))
    lhs = linalg.vectorize(A @ X @ B)
    rhs = linalg.kron(B.T, A) @ linalg.vectorize(X)
    assert_allclose(lhs, rhs, atol=1e-12)


def test_sym_eig_ascending(rng):
    S = linalg.random_symmetric(6, rng)
    w, V = linalg.sym_eig(S)
    assert np.all(np.diff(w) >= 0)
    assert_allclose(S @ V, V * w, atol=1e-12)


def test_orthonormalize_positive_diagonal(rng):
    A = rng.standard_normal((8, 3))
    Q = linalg.orthonormalize(A)
    assert_allclose(Q.T @ Q, np.eye(3), atol=1e-14)
    assert np.all(np.diag(Q.T @ A) > 0)


def test_as_symmetric_rejects_asymmetric():
    with pytest.raises(ConstraintError):
        linalg.as_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_matrix_market_roundtrip(tmp_path, rng):
    M = rng.standard_normal((4, 3))
    path = tmp_path / "m.mtx"
    linalg.write_matrix_market(path, M, comment="test")
    assert_allclose(linalg.read_matrix_market(str(path)), M, rtol=0, atol=0)


def test_matrix_market_garbage():
    with pytest.raises(ParseError):
        linalg.read_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1.0\n")
