import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from qmanopt import linalg
from qmanopt.errors import ConstraintError, DimensionError, ParameterError
from qmanopt.manifold import (
    GRASSMANN,
    STIEFEL,
    ManifoldKind,
    StiefelPoint,
    TangentAction,
    action_from_operator,
    canonicalize,
    inner,
    j_action,
    left_action,
    norm,
    project_tangent,
    retract,
    tangent_action,
    transport_action,
)

from conftest import random_frame


def random_tangent(X, kind, rng):
    return project_tangent(X, rng.standard_normal((X.n, X.p)), kind)


def test_kind_parse():
    assert ManifoldKind.parse("st") is STIEFEL
    assert ManifoldKind.parse("Grassmann") is GRASSMANN
    assert ManifoldKind.parse(GRASSMANN) is GRASSMANN
    with pytest.raises(ParameterError):
        ManifoldKind.parse("sphere")


def test_point_validation():
    with pytest.raises(ConstraintError):
        StiefelPoint(np.ones((3, 2)))
    with pytest.raises(DimensionError):
        StiefelPoint(np.eye(2, 3))
    X = StiefelPoint(np.eye(3)[:, :2])
    assert (X.n, X.p) == (3, 2)
    with pytest.raises(ValueError):
        X.matrix[0, 0] = 2.0


@pytest.mark.parametrize("kind", [STIEFEL, GRASSMANN])
def test_projection_is_idempotent(kind, rng):
    X = random_frame(7, 3, rng)
    Z = random_tangent(X, kind, rng)
    assert_allclose(project_tangent(X, Z, kind), Z, atol=1e-13)
    if kind is STIEFEL:
        assert_allclose(linalg.sym(X.matrix.T @ Z), 0.0, atol=1e-13)
    else:
        assert_allclose(X.matrix.T @ Z, 0.0, atol=1e-13)


@pytest.mark.parametrize("kind", [STIEFEL, GRASSMANN])
def test_tangent_action_reconstructs(kind, rng):
    X = random_frame(6, 2, rng)
    Z = random_tangent(X, kind, rng)
    act = tangent_action(X, Z, kind)
    assert_allclose(act.dense(X), Z, atol=1e-13)
    assert_allclose(act.L, -act.L.T, atol=1e-14)
    assert_allclose(act.A, -act.A.T, atol=1e-14)


def test_metric_hand_value():
    X = np.array([[1.0], [0.0]])
    a, b = 0.7, -1.3
    Z = TangentAction(left_action(X, np.array([[0.0], [a]])), np.zeros((1, 1)))
    W = TangentAction(left_action(X, np.array([[0.0], [b]])), np.zeros((1, 1)))
    assert inner(Z, W) == pytest.approx(a * b, abs=1e-15)


def test_metric_matches_euclidean(rng):
    X = random_frame(8, 3, rng)
    Z, W = random_tangent(X, STIEFEL, rng), random_tangent(X, STIEFEL, rng)
    u, v = tangent_action(X, Z), tangent_action(X, W)
    assert inner(u, v) == pytest.approx(np.vdot(Z, W), abs=1e-12)
    assert norm(u) == pytest.approx(np.linalg.norm(Z), abs=1e-12)


def test_left_action_alpha_family(rng):
    X = random_frame(6, 2, rng)
    Z = random_tangent(X, STIEFEL, rng)
    P = X.projector()
    Xm = X.matrix
    for a in (0.0, 0.3, 1.0):
        M = (np.eye(6) - a * P) @ Z
        assert_allclose(left_action(X, Z, a), M @ Xm.T - Xm @ M.T, atol=1e-13)
    with pytest.raises(ParameterError):
        left_action(X, Z, 1.5)


def test_action_from_operator_projects(rng):
    X = random_frame(8, 3, rng)
    B = rng.standard_normal((8, 8))
    K = np.diag([3.0, 2.0, 1.0])
    for kind in (STIEFEL, GRASSMANN):
        act = action_from_operator(X, B, K, kind)
        Z = project_tangent(X, B @ X.matrix @ K, kind)
        assert_allclose(act.dense(X), Z, atol=1e-12)


def test_canonicalize_fixes_canonical_pairs(rng):
    X = random_frame(6, 2, rng)
    act = tangent_action(X, random_tangent(X, STIEFEL, rng))
    again = canonicalize(X, act, STIEFEL)
    assert_allclose(again.L, act.L, atol=1e-13)
    assert_allclose(again.A, act.A, atol=1e-13)


def test_j_action_reproduces_grassmann_tangent(rng):
    X = random_frame(7, 3, rng)
    Z = random_tangent(X, GRASSMANN, rng)
    J = j_action(X, Z @ X.matrix.T)
    assert_allclose(J @ X.matrix, Z, atol=1e-13)
    assert_allclose(J, -J.T, atol=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_retraction_first_order(alpha, rng):
    X = random_frame(6, 3, rng)
    Z = random_tangent(X, STIEFEL, rng)
    act = tangent_action(X, Z)
    t = 1e-5
    d = (retract(X, act, t, alpha).matrix - retract(X, act, -t, alpha).matrix) / (2 * t)
    assert_allclose(d, Z, atol=1e-8)


def test_retraction_formula(rng):
    X = random_frame(5, 2, rng)
    act = tangent_action(X, random_tangent(X, STIEFEL, rng))
    Y = retract(X, act, 0.4)
    assert_allclose(Y.matrix, expm(0.4 * act.L) @ X.matrix @ expm(-0.4 * act.A), atol=1e-13)
    assert retract(X, act, 0.0) is X


def test_transport_orders_converge(rng):
    X = random_frame(6, 2, rng)
    eta = tangent_action(X, random_tangent(X, STIEFEL, rng))
    exact = None
    errs = []
    for scale in (1e-1, 1e-2):
        step = tangent_action(X, random_tangent(X, STIEFEL, np.random.default_rng(5))) * scale
        exact = transport_action(step, eta, "exact")
        errs.append([np.linalg.norm(transport_action(step, eta, k).L - exact.L) for k in (0, 1, 2)])
    errs = np.array(errs)
    # error shrinks by roughly 10^(k+1) per decade of step size
    for k in range(3):
        assert errs[1, k] < errs[0, k] * 10 ** (-(k + 1) + 0.3)
    with pytest.raises(ParameterError):
        transport_action(step, eta, 3)


def test_action_arithmetic(rng):
    a = TangentAction(linalg.random_skew(4, rng), linalg.random_skew(2, rng))
    b = TangentAction(linalg.random_skew(4, rng), linalg.random_skew(2, rng))
    c = 2.0 * a - b / 2.0 + (-a)
    assert_allclose(c.L, a.L - 0.5 * b.L)
    assert_allclose(c.A, a.A - 0.5 * b.A)
    assert c.is_finite()
    with pytest.raises(DimensionError):
        a + TangentAction.zeros(3, 2)
