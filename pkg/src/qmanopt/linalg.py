"""Dense real linear-algebra kernels.

Matrices are plain ``numpy.ndarray`` objects.  The helpers here validate
shape and structure at module boundaries; everything else in the package
assumes validated inputs.
"""

from __future__ import annotations

import io
import os

import numpy as np
import scipy.io
import scipy.linalg

from .errors import ConstraintError, DimensionError, NumericalError, ParseError

SYMMETRY_TOL = 1e-12


def as_matrix(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConstraintError(f"{name} has non-finite entries")
    return A


def as_square(A, name="matrix"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def as_symmetric(S, tol=SYMMETRY_TOL, name="matrix"):
    """Validate ``S`` as a real symmetric matrix and return it as an array."""
    S = as_square(S, name)
    dev = np.max(np.abs(S - S.T), initial=0.0)
    if dev > tol:
        raise ConstraintError(f"{name} is not symmetric: max |S - S^T| = {dev:.3e}")
    return S


def as_skew(L, tol=SYMMETRY_TOL, name="matrix"):
    """Validate ``L`` as a real skew-symmetric matrix and return it as an array."""
    L = as_square(L, name)
    dev = np.max(np.abs(L + L.T), initial=0.0)
    # relative to the entry scale so large generators are not rejected for rounding
    if dev > tol * max(1.0, np.max(np.abs(L), initial=0.0)):
        raise ConstraintError(f"{name} is not skew-symmetric: max |L + L^T| = {dev:.3e}")
    return L


def sym(A):
    return 0.5 * (A + A.T)


def skew(A):
    return 0.5 * (A - A.T)


def split_sym_skew(A):
    """Return ``(sy(A), sk(A))`` for a square matrix ``A``."""
    A = as_square(A)
    return sym(A), skew(A)


def comm(A, B):
    return A @ B - B @ A


def anticomm(A, B):
    return A @ B + B @ A


def expm_skew(L, t=1.0):
    """Orthogonal matrix ``exp(t L)`` for skew-symmetric ``L``.

    Uses scaling-and-squaring Padé; for skew input the result is orthogonal
    with determinant +1 up to rounding.
    """
    L = as_skew(L, tol=1e-9, name="generator")
    if L.shape[0] == 0:
        return np.eye(0)
    return scipy.linalg.expm(t * L)


def kron(A, B):
    return np.kron(A, B)


def vectorize(X):
    """Stack the columns of ``X``; the column index is the slow index."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {X.shape}")
    return X.reshape(-1, order="F")


def unvectorize(v, rows, cols):
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise DimensionError(f"vector of length {v.size} cannot be reshaped to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def trace_inner(A, B):
    """Euclidean trace product ``Tr(A^T B)``."""
    return float(np.vdot(A, B).real)


def sym_eig(S):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending."""
    S = as_symmetric(S, tol=1e-9)
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver did not converge for n={S.shape[0]}: {exc}") from exc
    return w, V


def orthonormalize(A):
    """Orthonormal basis of the column span of ``A`` (thin QR with sign fix)."""
    Q, R = np.linalg.qr(as_matrix(A))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_orthonormal(n, p, rng):
    return orthonormalize(rng.standard_normal((n, p)))


def random_symmetric(n, rng, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * sym(A)


def random_skew(n, rng, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * skew(A)


def read_matrix_market(source):
    """Read a dense real matrix in MatrixMarket array format.

    ``source`` is a path or a string holding the file contents.
    """
    try:
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            M = scipy.io.mmread(source)
        else:
            M = scipy.io.mmread(io.StringIO(str(source)))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"invalid MatrixMarket data: {exc}") from exc
    if hasattr(M, "toarray"):
        M = M.toarray()
    return as_matrix(M)


def write_matrix_market(target, M, comment=""):
    """Write ``M`` in ``%%MatrixMarket matrix array real general`` format."""
    M = as_matrix(M)
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, M, comment=comment, field="real", symmetry="general", precision=17)
    text = buf.getvalue().decode()
    if target is None:
        return text
    with open(target, "w") as fh:
        fh.write(text)
    return text
