"""Cost, Riemannian gradient and Hessian for the two eigenproblems.

    Grassmann:  f(X) = 1/2 Tr X^T H X
    Stiefel:    f(X) = 1/2 Tr X^T H X K,   K diagonal

All derivatives are returned as canonical :class:`TangentAction` pairs and
are evaluated through the frame protocol only (``projector`` and
``compress``), so they run unchanged on every backend.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .errors import DimensionError, NumericalError, ParameterError
from .linalg import anticomm, comm
from .manifold import (
    GRASSMANN,
    STIEFEL,
    TangentAction,
    canonicalize,
    inner,
    norm,
    require_nontrivial,
)


def default_weights(p):
    """Default Stiefel weights ``(p, p-1, ..., 1)``."""
    return np.arange(p, 0, -1, dtype=float)


class GrassmannProblem:
    kind = GRASSMANN

    def __init__(self, H):
        self.H = linalg.as_symmetric(H, tol=1e-10, name="H")

    @property
    def n(self):
        return self.H.shape[0]

    def _check(self, X):
        if X.n != self.n:
            raise DimensionError(f"frame has n={X.n}, Hamiltonian has n={self.n}")
        require_nontrivial(self.kind, X.n, X.p)

    def cost(self, X):
        self._check(X)
        return 0.5 * float(np.trace(X.compress(self.H)))

    def gradient(self, X):
        self._check(X)
        P = X.projector()
        return TangentAction(comm(self.H, P), np.zeros((X.p, X.p)))

    def hess_vec(self, X, V):
        self._check(X)
        P = X.projector()
        return TangentAction(linalg.skew(comm(comm(self.H, V.L), P)), np.zeros((X.p, X.p)))


class StiefelProblem:
    """Weighted eigenvector problem with diagonal weights ``k``.

    Weights must be pairwise distinct unless ``allow_degenerate`` is set
    (used by the +/-1 block-splitting stages).
    """

    kind = STIEFEL

    def __init__(self, H, k=None, allow_degenerate=False):
        self.H = linalg.as_symmetric(H, tol=1e-10, name="H")
        self.k = None if k is None else np.asarray(k, dtype=float).ravel()
        if self.k is not None and not allow_degenerate:
            if len(np.unique(self.k)) != len(self.k):
                raise ParameterError(f"K diagonal entries must be distinct, got {self.k.tolist()}")
        self.allow_degenerate = allow_degenerate

    @property
    def n(self):
        return self.H.shape[0]

    def weights(self, p):
        k = default_weights(p) if self.k is None else self.k
        if k.shape != (p,):
            raise DimensionError(f"K has {k.size} entries but the frame has p={p}")
        return np.diag(k)

    def _check(self, X):
        if X.n != self.n:
            raise DimensionError(f"frame has n={X.n}, Hamiltonian has n={self.n}")
        return self.weights(X.p)

    def cost(self, X):
        K = self._check(X)
        return 0.5 * float(np.trace(X.compress(self.H) @ K))

    def gradient(self, X):
        K = self._check(X)
        E = X.compress(self.H)
        return TangentAction(comm(self.H, X.projector(K)), 0.5 * comm(E, K))

    def hess_vec(self, X, V):
        """Hessian applied to a canonical action pair ``V``.

        Follows the long left/right factorization; the pair it produces is
        not canonical (it carries an ``X_perp X_perp`` block), so the result
        is re-canonicalized before returning.
        """
        K = self._check(X)
        H, L, A = self.H, V.L, V.A
        E = X.compress(H)
        P = X.projector()
        XK = X.projector(K)
        G = comm(H, P)
        GK = comm(H, XK)
        left = (
            comm(comm(H, L), XK)
            + 0.5 * comm(L, GK)
            - 0.5 * anticomm(L, comm(XK, G))
            - H @ X.projector(A @ K)
            - X.projector(K @ A) @ H
        )
        right = (
            linalg.skew(X.compress(H @ L) @ K)
            - 0.75 * anticomm(A, anticomm(E, K))
            - 0.5 * (E @ A @ K + K @ A @ E)
        )
        return canonicalize(X, TangentAction(left, right), STIEFEL)


class RestrictedProblem:
    """A problem restricted to frames whose columns stay in fixed invariant cells.

    ``projectors`` are orthogonal projectors ``P_c`` onto mutually
    orthogonal subspaces, each column of the frame lying in one of them.
    Gradient and Hessian left actions are compressed to
    ``sum_c P_c L P_c`` and re-canonicalized, which is the Riemannian
    restriction to the submanifold of such frames.  Rounding-level
    couplings between cells then cannot be amplified by Newton steps.

    ``column_cells`` labels the cell of each frame column; right actions
    that rotate columns of different cells into each other are zeroed.
    """

    def __init__(self, base, projectors, column_cells=None):
        self.base = base
        self.kind = base.kind
        self.projectors = [np.asarray(P, dtype=float) for P in projectors]
        if not self.projectors:
            raise ParameterError("need at least one projector")
        self.mask = None
        if column_cells is not None:
            c = np.asarray(column_cells)
            self.mask = (c[:, None] == c[None, :]).astype(float)

    @property
    def H(self):
        return self.base.H

    @property
    def n(self):
        return self.base.n

    def project(self, X, act):
        """Tangent projection onto the restricted submanifold."""
        return self._restrict(X, act)

    def _restrict(self, X, act):
        L = sum(P @ act.L @ P for P in self.projectors)
        A = act.A if self.mask is None else act.A * self.mask
        return canonicalize(X, TangentAction(L, A), self.kind)

    def cost(self, X):
        return self.base.cost(X)

    def gradient(self, X):
        return self._restrict(X, self.base.gradient(X))

    def hess_vec(self, X, V):
        return self._restrict(X, self.base.hess_vec(X, V))


def random_tangent(X, kind, rng):
    """Unit-norm random tangent action at ``X``."""
    n, p = X.n, X.p
    act = TangentAction(linalg.random_skew(n, rng), linalg.random_skew(p, rng))
    act = canonicalize(X, act, kind)
    nrm = norm(act)
    if nrm == 0.0:
        return act
    return act / nrm


DEFAULT_STEPS = np.logspace(-1, -4, 7)


def _loglog_fit(ts, errs):
    errs = np.asarray(errs)
    if np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise NumericalError(f"model errors not positive and finite: {errs}")
    x, y = np.log(ts), np.log(errs)
    (slope, icpt) = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - slope * x - icpt) ** 2)))
    return float(slope), resid


# A direction whose leading error coefficient is accidentally small shows a
# bent log-log curve; such samples are replaced by fresh directions.
LINEARITY_TOL = 0.05


def _fd_check(problem, X, seed, order, gradient, hess_vec, ts, alpha):
    gradient = gradient or problem.gradient
    hess_vec = hess_vec or problem.hess_vec
    ts = DEFAULT_STEPS if ts is None else np.asarray(ts, dtype=float)
    f0 = problem.cost(X)
    g = gradient(X)
    best = None
    for attempt in range(5):
        rng = np.random.default_rng([seed, attempt])
        V = random_tangent(X, problem.kind, rng)
        slope1 = inner(g, V)
        if abs(slope1) <= 1e-8 * max(1.0, abs(f0)):
            continue
        curv = inner(V, hess_vec(X, V)) if order == 2 else 0.0
        errs = []
        for t in ts:
            ft = problem.cost(X.retract(V, t, alpha))
            errs.append(abs(ft - (f0 + t * slope1 + 0.5 * t * t * curv)))
        fit = _loglog_fit(ts, errs)
        if best is None or fit[1] < best[1]:
            best = fit
        if fit[1] < LINEARITY_TOL:
            break
    if best is None:
        raise NumericalError("directional derivative vanished for 5 random directions; gradient is zero at X")
    return best[0]


def fd_check_gradient(problem, X, seed=0, gradient=None, ts=None, alpha=0.0):
    """Log-log slope of ``|f(R(tV)) - f - t<g, V>|``; 2 for a correct gradient."""
    return _fd_check(problem, X, seed, 1, gradient, None, ts, alpha)


def fd_check_hessian(problem, X, seed=0, hess_vec=None, ts=None, gradient=None, alpha=0.0):
    """Slope of the second-order model error; 3 for a correct Hessian."""
    return _fd_check(problem, X, seed, 2, gradient, hess_vec, ts, alpha)
