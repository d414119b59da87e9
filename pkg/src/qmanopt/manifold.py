"""Stiefel and Grassmann manifolds with tangent vectors stored as actions.

A tangent vector ``Z`` at a frame ``X`` is represented by a pair of skew
matrices ``(L, A)`` with ``Z = L X - X A``.  The canonical pair is

    L = Z X^T - X Z^T,     A = X^T Z,

and the Euclidean metric becomes ``<Z, W> = 1/2 <L_Z, L_W> - <A_Z, A_W>``
on canonical pairs.  On the Grassmannian (horizontal lift) ``A`` is zero.

Everything that touches the frame ``X`` only through the products
``X M X^T`` and ``X^T B X`` is written against the small *frame protocol*
(``n``, ``p``, ``projector``, ``compress``, ``retract``) so that the same
code runs on the statevector backend.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConstraintError, DimensionError, NumericalError, ParameterError

ORTHONORMALITY_TOL = 1e-10


class ManifoldKind(enum.Enum):
    STIEFEL = "stiefel"
    GRASSMANN = "grassmann"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"st": cls.STIEFEL, "stiefel": cls.STIEFEL, "gr": cls.GRASSMANN, "grassmann": cls.GRASSMANN}
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown manifold {value!r}; expected one of {sorted(aliases)}") from None


STIEFEL = ManifoldKind.STIEFEL
GRASSMANN = ManifoldKind.GRASSMANN


@dataclass(frozen=True, eq=False)
class TangentAction:
    """Left/right Lie-algebra actions of a tangent vector.

    Supports the vector-space operations needed by the optimizers.  Actions
    from different anchor points must not be mixed except through a
    transport.
    """

    L: np.ndarray
    A: np.ndarray

    @classmethod
    def zeros(cls, n, p):
        return cls(np.zeros((n, n)), np.zeros((p, p)))

    @property
    def n(self):
        return self.L.shape[0]

    @property
    def p(self):
        return self.A.shape[0]

    def dense(self, X):
        """Reconstruct ``Z = L X - X A`` at the dense frame ``X``."""
        X = X.matrix if isinstance(X, StiefelPoint) else X
        return self.L @ X - X @ self.A

    def _check(self, other):
        if self.L.shape != other.L.shape or self.A.shape != other.A.shape:
            raise DimensionError("tangent actions of different dimensions")

    def __add__(self, other):
        self._check(other)
        return TangentAction(self.L + other.L, self.A + other.A)

    def __sub__(self, other):
        self._check(other)
        return TangentAction(self.L - other.L, self.A - other.A)

    def __neg__(self):
        return TangentAction(-self.L, -self.A)

    def __mul__(self, c):
        return TangentAction(c * self.L, c * self.A)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return TangentAction(self.L / c, self.A / c)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.A)))

    def __repr__(self):
        return f"TangentAction(n={self.n}, p={self.p}, |L|={np.linalg.norm(self.L):.3e}, |A|={np.linalg.norm(self.A):.3e})"


class StiefelPoint:
    """An ``n x p`` frame with orthonormal columns (classical backend)."""

    __slots__ = ("_X",)

    def __init__(self, X, tol=ORTHONORMALITY_TOL):
        X = linalg.as_matrix(X, "frame")
        n, p = X.shape
        if not 1 <= p <= n:
            raise DimensionError(f"frame must satisfy 1 <= p <= n, got {n}x{p}")
        dev = np.abs(X.T @ X - np.eye(p))
        worst = np.unravel_index(np.argmax(dev), dev.shape)
        if dev[worst] > tol:
            raise ConstraintError(
                f"columns are not orthonormal: |X^T X - I| = {dev[worst]:.3e} at entry {tuple(int(i) for i in worst)}"
            )
        X = X.copy()
        X.setflags(write=False)
        self._X = X

    @property
    def matrix(self):
        return self._X

    @property
    def n(self):
        return self._X.shape[0]

    @property
    def p(self):
        return self._X.shape[1]

    def projector(self, weights=None):
        """``X W X^T``; ``X X^T`` when ``weights`` is omitted."""
        X = self._X
        if weights is None:
            return X @ X.T
        W = np.asarray(weights, dtype=float)
        if W.shape != (self.p, self.p):
            raise DimensionError(f"weights must be {self.p}x{self.p}, got {W.shape}")
        return X @ W @ X.T

    def compress(self, B):
        """``X^T B X``."""
        B = np.asarray(B, dtype=float)
        if B.shape != (self.n, self.n):
            raise DimensionError(f"operator must be {self.n}x{self.n}, got {B.shape}")
        return self._X.T @ B @ self._X

    def retract(self, act, t=1.0, alpha=0.0):
        return retract(self, act, t, alpha)

    def left_multiply(self, U):
        """Frame ``U X`` for orthogonal ``U``."""
        return StiefelPoint(U @ self._X)

    def select_columns(self, indices):
        return StiefelPoint(self._X[:, list(indices)])

    def __repr__(self):
        return f"StiefelPoint(n={self.n}, p={self.p})"


def check_point(X, tol=ORTHONORMALITY_TOL):
    """Validate ``X`` as a Stiefel point; raises ``ConstraintError`` otherwise."""
    return StiefelPoint(X, tol=tol)


def _dense(X):
    return X.matrix if isinstance(X, StiefelPoint) else linalg.as_matrix(X)


def require_nontrivial(kind, n, p):
    if ManifoldKind.parse(kind) is GRASSMANN and p == n:
        raise ParameterError(f"Gr({n},{p}) is a single point; use p < n")


def project_tangent(X, V, kind):
    """Project an ambient ``n x p`` matrix onto the tangent space at ``X``."""
    Xm = _dense(X)
    V = linalg.as_matrix(V, "direction")
    if V.shape != Xm.shape:
        raise DimensionError(f"direction shape {V.shape} does not match frame {Xm.shape}")
    if ManifoldKind.parse(kind) is STIEFEL:
        return V - Xm @ linalg.sym(Xm.T @ V)
    return V - Xm @ (Xm.T @ V)


def left_action(X, Z, alpha=0.0):
    """Left action of the tangent ``Z``.

    ``alpha`` selects the one-parameter family
    ``(I - a XX^T) Z X^T - X Z^T (I - a XX^T)``; ``alpha = 0`` is the
    canonical ``Z X^T - X Z^T``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    Xm = _dense(X)
    Z = np.asarray(Z, dtype=float)
    if Z.shape != Xm.shape:
        raise DimensionError(f"tangent shape {Z.shape} does not match frame {Xm.shape}")
    if alpha == 0.0:
        ZX = Z @ Xm.T
        return ZX - ZX.T
    M = Z - alpha * Xm @ (Xm.T @ Z)
    MX = M @ Xm.T
    return MX - MX.T


def right_action(X, Z):
    """Right action ``X^T Z`` (skew for Stiefel tangents)."""
    Xm = _dense(X)
    Z = np.asarray(Z, dtype=float)
    if Z.shape != Xm.shape:
        raise DimensionError(f"tangent shape {Z.shape} does not match frame {Xm.shape}")
    return Xm.T @ Z


def tangent_action(X, Z, kind=STIEFEL):
    """Canonical action pair of a dense tangent vector."""
    kind = ManifoldKind.parse(kind)
    Xm = _dense(X)
    if kind is GRASSMANN:
        return TangentAction(left_action(Xm, Z), np.zeros((Xm.shape[1], Xm.shape[1])))
    return TangentAction(left_action(Xm, Z), linalg.skew(right_action(Xm, Z)))


def action_from_operator(frame, B, K=None, kind=STIEFEL):
    """Action pair of ``P_X(B X K)`` built only from frame measurements.

    With ``S = X K X^T`` the Stiefel pair is ``L = B S - S B^T`` and
    ``A = sk(X^T B X K)``; the Grassmann pair projects out the ``X X^T``
    component first.  ``K`` defaults to the identity and must be symmetric.
    """
    kind = ManifoldKind.parse(kind)
    n, p = frame.n, frame.p
    B = np.asarray(B, dtype=float)
    if B.shape != (n, n):
        raise DimensionError(f"operator must be {n}x{n}, got {B.shape}")
    if K is None:
        K = np.eye(p)
    K = linalg.as_symmetric(K, tol=1e-10, name="K")
    if K.shape != (p, p):
        raise DimensionError(f"K must be {p}x{p}, got {K.shape}")
    S = frame.projector(K)
    if kind is GRASSMANN:
        P = frame.projector()
        BS = B @ S - P @ B @ S
        return TangentAction(BS - BS.T, np.zeros((p, p)))
    BS = B @ S
    return TangentAction(BS - BS.T, linalg.skew(frame.compress(B) @ K))


def j_action(X, B):
    """``J_X(B) = (I - XX^T) B - B^T (I - XX^T)`` for a generic ``n x n`` B."""
    Xm = _dense(X)
    B = linalg.as_square(B, "operator")
    if B.shape[0] != Xm.shape[0]:
        raise DimensionError(f"operator must be {Xm.shape[0]}x{Xm.shape[0]}, got {B.shape}")
    QB = B - Xm @ (Xm.T @ B)
    return QB - QB.T


def inner(u, v):
    """Metric on canonical action pairs: ``1/2 <L_u, L_v> - <A_u, A_v>``."""
    if u.L.shape != v.L.shape or u.A.shape != v.A.shape:
        raise DimensionError("tangent actions of different dimensions")
    return 0.5 * float(np.vdot(u.L, v.L)) - float(np.vdot(u.A, v.A))


def norm(u):
    return float(np.sqrt(max(inner(u, u), 0.0)))


def canonicalize(frame, act, kind=STIEFEL):
    """Re-express an arbitrary action pair canonically at ``frame``.

    The pair ``(L, A)`` defines ``Z = L X - X A`` (projected horizontally on
    the Grassmannian); the result is the canonical pair of that ``Z``.
    """
    kind = ManifoldKind.parse(kind)
    P = frame.projector()
    L = act.L
    if kind is GRASSMANN:
        # Z = (I - P) L X
        LP = L @ P
        M = LP - P @ LP
        return TangentAction(M - M.T, np.zeros_like(act.A))
    # the formula assumes skew inputs; projecting first stops rounding asymmetry from growing
    L, A = linalg.skew(L), linalg.skew(act.A)
    XAX = frame.projector(A)
    return TangentAction(L @ P + P @ L - 2.0 * XAX, frame.compress(L) - A)


def retraction_generators(frame, act, alpha):
    """Left and right generators ``(L', A')`` with ``R = exp(L') X exp(-A')``."""
    if alpha == 0.0:
        return act.L, act.A
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    # L^alpha = L - 2 alpha X A X^T on canonical pairs; right factor exp((2 alpha - 1) A).
    return act.L - 2.0 * alpha * frame.projector(act.A), (1.0 - 2.0 * alpha) * act.A


def retract(X, act, t=1.0, alpha=0.0):
    """Exponential retraction ``exp(t L) X exp(-t A)`` (alpha family for alpha > 0)."""
    if not isinstance(X, StiefelPoint):
        X = StiefelPoint(X)
    if act.L.shape != (X.n, X.n) or act.A.shape != (X.p, X.p):
        raise DimensionError("action does not match the frame dimensions")
    if t == 0.0:
        return X
    L, A = retraction_generators(X, act, alpha)
    Y = linalg.expm_skew(L, t) @ X.matrix
    if np.any(A):
        Y = Y @ linalg.expm_skew(A, -t)
    try:
        return StiefelPoint(Y)
    except ConstraintError as exc:
        raise NumericalError(f"retraction left the manifold: {exc}") from exc


TRANSPORT_ORDERS = (0, 1, 2, "exact")


def transport_action(step, eta, order=0):
    """Carry the actions of ``eta`` along the retraction by ``step``.

    ``order`` 0 keeps the action matrices unchanged, 1 and 2 truncate the
    BCH series ``L + [L_s, L] + 1/2 [L_s, [L_s, L]]``, and ``"exact"``
    conjugates by the exponentials.
    """
    if order not in TRANSPORT_ORDERS:
        raise ParameterError(f"unknown transport order {order!r}; expected one of {TRANSPORT_ORDERS}")
    if order == 0:
        return eta
    if order == "exact":
        UL = linalg.expm_skew(step.L)
        UA = linalg.expm_skew(step.A)
        return TangentAction(UL @ eta.L @ UL.T, UA @ eta.A @ UA.T)

    def series(S, M):
        first = linalg.comm(S, M)
        out = M + first
        if order == 2:
            out = out + 0.5 * linalg.comm(S, first)
        return out

    return TangentAction(series(step.L, eta.L), series(step.A, eta.A))
