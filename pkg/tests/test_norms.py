from __future__ import annotations

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import eigh

from finslerkit.geometry_core import rotation_matrix
from finslerkit.norms import (AsymmetricMatrixError, EuclideanNorm, FunctionNorm, GSqrtNorm, PhiLambda,
                              QuotientNorm, RelativeEigenError, hessian_min_eigenvalue, is_finsler_gsqrt,
                              is_minkowski_quotient, jacobi_eigenvalues, linear_conformal, minkowski_check,
                              phi_lambda_eval, relative_eigen_range)


# relative eigenproblem

@pytest.mark.parametrize("A,B,expected", [
    (np.eye(3), np.eye(3), (1.0, 1.0)),
    (np.diag([1.0, 3.0]), np.eye(2), (1.0, 3.0)),
    (np.diag([2.0, 6.0]), np.diag([1.0, 2.0]), (2.0, 3.0)),
])
def test_relative_eigen_range(A, B, expected):
    assert relative_eigen_range(A, B) == pytest.approx(expected, rel=1e-14)


def test_relative_eigen_errors():
    with pytest.raises(RelativeEigenError, match="relative eigenproblem undefined"):
        relative_eigen_range(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(RelativeEigenError):
        relative_eigen_range(np.eye(2), np.diag([1.0, 0.0]))
    with pytest.raises(AsymmetricMatrixError):
        relative_eigen_range([[1.0, 0.1], [0.2, 1.0]], np.eye(2))


def _spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(1.0, cond, n)) @ Q.T


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8))
def test_jacobi_matches_lapack(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    S = M + M.T
    assert np.allclose(jacobi_eigenvalues(S), np.linalg.eigvalsh(S), atol=1e-12 * (1 + np.abs(S).max()))


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5))
def test_relative_eigen_against_scipy(seed, n):
    rng = np.random.default_rng(seed)
    A, B = _spd(rng, n), _spd(rng, n)
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    w = eigh(A, B, eigvals_only=True)
    assert relative_eigen_range(A, B) == pytest.approx((w[0], w[-1]), rel=1e-10)


# Minkowski quotient predicate

def test_minkowski_examples():
    assert is_minkowski_quotient(np.diag([1.0, 1.9]), np.eye(2))
    assert not is_minkowski_quotient(np.diag([1.0, 2.0]), np.eye(2))
    assert minkowski_check(np.diag([1.0, 2.0]), np.eye(2)).margin == 0.0
    assert minkowski_check(np.diag([1.0, 2.0]), np.eye(2)).on_boundary
    assert not minkowski_check(np.diag([1.0, 1.9]), np.eye(2)).on_boundary
    # boundary in a rotated frame: rounding may land on either side, the flag still fires
    R = np.linalg.qr(np.random.default_rng(3).standard_normal((3, 3)))[0]
    M = R @ np.diag([1.0, 1.5, 2.0]) @ R.T
    assert minkowski_check(0.5 * (M + M.T), np.eye(3)).on_boundary
    assert is_minkowski_quotient(np.eye(3), np.eye(3))


def _quotient_hessian_min(A, B, v):
    return hessian_min_eigenvalue(QuotientNorm(A, B), np.zeros(len(v)), v)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5))
def test_quotient_predicate_agrees_with_hessian(seed, n):
    """Certified quotients are convex at 100 random v; rejected ones are not at some sampled v.

    The sample set for the rejected case includes the relative eigenvector of
    lambda_max, where the Hessian of F^2 loses positivity first.
    """
    rng = np.random.default_rng(seed)
    A = _spd(rng, n, cond=3.0)
    B = _spd(rng, n, cond=1.5)
    A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)
    lo, hi = relative_eigen_range(A, B)
    assume(abs(hi / lo - 2.0) > 1e-3)
    vs = rng.standard_normal((100, n))
    if is_minkowski_quotient(A, B):
        assert all(_quotient_hessian_min(A, B, v) > 0 for v in vs)
    else:
        _, V = eigh(A, B)
        samples = np.vstack([V[:, -1], vs])
        assert min(_quotient_hessian_min(A, B, v) for v in samples) <= 0


# Hessian examples

def test_hessian_min_eigenvalue_examples(rng):
    for v in rng.standard_normal((5, 3)):
        assert hessian_min_eigenvalue(EuclideanNorm(), np.zeros(3), v) == pytest.approx(2.0, abs=1e-6)
    for v in rng.standard_normal((5, 3)):
        v /= np.linalg.norm(v)
        assert hessian_min_eigenvalue(PhiLambda(1.0), np.zeros(3), v) == pytest.approx(2.0, abs=1e-6)


def test_hessian_detects_non_minkowski():
    F = FunctionNorm(lambda x, v: (v[..., 0] ** 2 + 2.5 * v[..., 1] ** 2) / np.linalg.norm(v, axis=-1), dim=2)
    # the negative direction sits at the eigenvector of the larger eigenvalue
    assert hessian_min_eigenvalue(F, np.zeros(2), np.array([0.0, 1.0])) < 0
    assert hessian_min_eigenvalue(F, np.zeros(2), np.array([0.0, 1.0])) == pytest.approx(-2.5, abs=1e-6)
    assert hessian_min_eigenvalue(F, np.zeros(2), np.array([1.0, 0.0])) == pytest.approx(2.0, abs=1e-6)


def test_hessian_rejects_zero_vector():
    with pytest.raises(ValueError):
        hessian_min_eigenvalue(EuclideanNorm(), np.zeros(3), np.zeros(3))


# g / sqrt(h)

def test_gsqrt_examples(rng):
    pts = rng.uniform(-3, 3, (10, 3))
    eye = lambda x: np.eye(3)
    assert is_finsler_gsqrt(eye, eye, pts).all_finsler
    for lam in (0.0, 0.5, 1.0, 2.0, 10.0):
        assert is_finsler_gsqrt(PhiLambda(lam).gram, eye, pts).all_finsler
    rep = is_finsler_gsqrt(lambda x: np.diag([1.0, 2.1]), lambda x: np.eye(2), pts[:, :2])
    assert not rep.all_finsler
    assert rep.points[0].lambda_max == pytest.approx(2.1)


def test_gsqrt_records_per_point_errors():
    h = lambda x: np.eye(2) if x[0] > 0 else np.diag([1.0, -1.0])
    rep = is_finsler_gsqrt(lambda x: np.eye(2), h, [[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]])
    assert [p.error is None for p in rep.points] == [True, False, True]
    assert "relative eigenproblem undefined" in rep.points[1].error
    assert not rep.all_finsler


def test_phi_lambda_is_gsqrt_with_gram(rng):
    x = rng.standard_normal((20, 3))
    v = rng.standard_normal((20, 3))
    phi = PhiLambda(1.3)
    G = GSqrtNorm(phi.gram, lambda x: np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)))
    assert np.allclose(G(x, v), phi(x, v), rtol=1e-13)


# phi_lambda

def test_phi_lambda_examples():
    assert phi_lambda_eval(0.0, [1, 2, 3], [3, 0, 4]) == 5.0
    assert phi_lambda_eval(1.0, [1, 0, 0], [0, 1, 0]) == pytest.approx(2.0, rel=1e-15)
    assert phi_lambda_eval(1.0, [1, 0, 0], [1, 0, 0]) == pytest.approx(3.0, rel=1e-15)
    assert phi_lambda_eval(1.0, [1, 0, 0], [0, 0, 0]) == 0.0


vec = arrays(float, 3, elements=st.floats(-3, 3))


@given(st.floats(0, 3), vec, vec.filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_phi_lambda_euclidean_at_zero(lam, x, v):
    assert phi_lambda_eval(0.0, x, v) == np.linalg.norm(v) or \
        phi_lambda_eval(0.0, x, v) == pytest.approx(np.linalg.norm(v), rel=1e-15)


@given(st.floats(0, 3), vec, vec.filter(lambda v: np.linalg.norm(v) > 1e-3),
       arrays(float, 3, elements=st.floats(-1, 1)).filter(lambda a: np.linalg.norm(a) > 0.1), st.floats(-6, 6))
def test_phi_lambda_rotation_invariant(lam, x, v, axis, angle):
    R = rotation_matrix(axis, angle)
    assert phi_lambda_eval(lam, R @ x, R @ v) == pytest.approx(phi_lambda_eval(lam, x, v), rel=1e-12)


@given(st.floats(0, 3), vec, vec.filter(lambda v: np.linalg.norm(v) > 1e-3), st.sampled_from([0.5, 2.0, 10.0]))
def test_phi_lambda_homogeneous(lam, x, v, t):
    assert phi_lambda_eval(lam, x, t * v) == pytest.approx(t * phi_lambda_eval(lam, x, v), rel=1e-14)


@given(st.floats(0, 3), vec, vec.filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_phi_lambda_positive(lam, x, v):
    assert phi_lambda_eval(lam, x, v) > 0


def test_phi_lambda_gradients_match_fd(rng):
    from finslerkit.derivatives import derivative_terms
    phi = PhiLambda(0.8)
    for _ in range(10):
        x, v = rng.standard_normal(3), rng.standard_normal(3)
        gx, gv = phi.gradients(x, v)
        fd = derivative_terms(lambda c: phi(c[:, :3], c[:, 3:]), np.concatenate([x, v]),
                              [(i, -1) for i in range(6)]).value
        assert np.allclose(np.concatenate([gx, gv]), fd, rtol=1e-8, atol=1e-9)


def test_norm_fields_homogeneous(rng):
    norms = [EuclideanNorm(), EuclideanNorm(scale=2.0), linear_conformal(0.5), PhiLambda(1.0),
             QuotientNorm(np.diag([1.0, 1.5, 1.2]))]
    x = rng.uniform(-0.5, 0.5, 3)
    v = rng.standard_normal(3)
    for n in norms:
        assert n(x, 3.0 * v) == pytest.approx(3.0 * n(x, v), rel=1e-14)
        assert n(x, v) > 0
