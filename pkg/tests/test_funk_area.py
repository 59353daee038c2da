from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finslerkit.funk_area import (GreatCircleQuadrature, NotANormError, funk_closed_form, funk_transform,
                                  funk_integrand, hausdorff_area_integrand_numeric, phi_lambda_area_integrand,
                                  radial_of_norm)
from finslerkit.geometry_core import E1, E3, orthonormal_frame, random_unit_vectors, rotation_matrix
from finslerkit.norms import EuclideanNorm, FunctionNorm, PhiLambda


def _unit(rng, n=1):
    return random_unit_vectors(rng, n, 3)


# radial functions

def test_radial_examples(rng):
    u = _unit(rng, 20)
    assert np.allclose(radial_of_norm(EuclideanNorm(), np.zeros(3))(u), 1.0)
    assert np.allclose(radial_of_norm(EuclideanNorm(scale=2.0), np.zeros(3))(u), 0.5)
    lam, x = 1.5, np.array([0.3, -0.4, 1.0])
    expected = 1.0 / (1 + lam ** 2 * x @ x + lam ** 2 * (u @ x) ** 2)
    assert np.allclose(radial_of_norm(PhiLambda(lam), x)(u), expected, rtol=1e-14)


def test_radial_recovery_identity(rng):
    rho = radial_of_norm(PhiLambda(0.7), np.array([1.0, 0.5, -0.2]))
    w = rng.standard_normal((50, 3)) * 3
    assert np.allclose(rho.recover(w), PhiLambda(0.7)(np.array([1.0, 0.5, -0.2]), w), rtol=1e-12)


def test_radial_rejects_non_norm():
    bad = FunctionNorm(lambda x, v: v[..., 0])
    with pytest.raises(NotANormError, match="not a norm at this point"):
        radial_of_norm(bad, np.zeros(3))(np.array([[-1.0, 0.0, 0.0]]))


# Funk transform

def test_quadrature_validation():
    for n in (15, 8, 17):
        with pytest.raises(ValueError):
            GreatCircleQuadrature(n)
    q = GreatCircleQuadrature(16)
    assert np.allclose(np.diff(q.angles), 2 * math.pi / 16)


def test_funk_examples(rng):
    for a in _unit(rng, 5):
        assert funk_transform(lambda v: np.ones(len(v)), a) == pytest.approx(2 * math.pi, rel=1e-14)
    f = funk_integrand(1.0, 1.0, E1)
    assert funk_transform(f, E1) == pytest.approx(2 * math.pi, rel=1e-14)
    assert funk_transform(f, E3) == pytest.approx(3 * math.pi / 2 ** 1.5, rel=1e-12)
    assert funk_transform(f, E3) == pytest.approx(3.33216, abs=1e-5)


def test_funk_rejects_non_unit():
    with pytest.raises(ValueError):
        funk_transform(lambda v: np.ones(len(v)), [1.0, 1.0, 0.0])
    # within 1e-10 is accepted
    funk_transform(lambda v: np.ones(len(v)), [1.0 + 5e-11, 0.0, 0.0])


def test_closed_form_examples(rng):
    for s in (0.5, 1.0, 3.0):
        x, a = rng.standard_normal(3), _unit(rng)[0]
        assert funk_closed_form(s, 0.0, x, a) == pytest.approx(2 * math.pi / s ** 4, rel=1e-14)
    assert funk_closed_form(1.0, 1.0, E1, E1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert funk_closed_form(1.0, 1.0, E1, E3) == pytest.approx(3 * math.pi / 2 ** 1.5, rel=1e-15)
    with pytest.raises(ValueError):
        funk_closed_form(0.0, 1.0, E1, E3)
    with pytest.raises(ValueError):
        funk_closed_form(-1.0, 1.0, E1, E3)


def test_funk_quadrature_converges(rng):
    worst = 0.0
    for _ in range(200):
        s, lam = rng.uniform(0.5, 4.0), rng.uniform(0.0, 2.0)
        x = _unit(rng)[0] * 2.0 * rng.random() ** (1 / 3)
        a = _unit(rng)[0]
        closed = funk_closed_form(s, lam, x, a)
        worst = max(worst, abs(funk_transform(funk_integrand(s, lam, x), a) - closed) / abs(closed))
    assert worst <= 1e-8


def test_funk_frame_independence(rng):
    f = funk_integrand(0.8, 1.7, np.array([1.2, -0.5, 0.9]))
    a = _unit(rng)[0]
    base = funk_transform(f, a)
    for _ in range(10):
        R = rotation_matrix(a, rng.uniform(0, 2 * math.pi))

        def rotated(b, R=R):
            b1, b2 = orthonormal_frame(b)
            return R @ b1, R @ b2

        other = funk_transform(f, a, GreatCircleQuadrature(512, rotated))
        assert other == pytest.approx(base, rel=1e-10)


# area integrands

def test_numeric_integrand_examples(rng):
    for a in rng.standard_normal((5, 3)):
        assert hausdorff_area_integrand_numeric(EuclideanNorm(), rng.standard_normal(3), a) == \
            pytest.approx(np.linalg.norm(a), rel=1e-13)
    assert hausdorff_area_integrand_numeric(PhiLambda(1.0), np.zeros(3), [1.0, 1.0, 0.0]) == \
        pytest.approx(math.sqrt(2), rel=1e-13)
    assert hausdorff_area_integrand_numeric(PhiLambda(1.0), E1, E1) == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(ValueError):
        hausdorff_area_integrand_numeric(EuclideanNorm(), np.zeros(3), np.zeros(3))


def test_closed_integrand_examples(rng):
    x, a = rng.standard_normal((100, 3)), rng.standard_normal((100, 3))
    assert np.allclose(phi_lambda_area_integrand(0.0, x, a), np.linalg.norm(a, axis=1), rtol=1e-14)
    assert phi_lambda_area_integrand(1.0, np.zeros(3), [0.0, 0.0, 5.0]) == pytest.approx(5.0, rel=1e-15)
    assert phi_lambda_area_integrand(1.0, E1, E1) == pytest.approx(4.0, rel=1e-15)
    assert phi_lambda_area_integrand(1.0, E1, np.zeros(3)) == 0.0


def test_numeric_matches_closed_on_grid(rng):
    for lam in (0.0, 0.5, 1.0, 2.0):
        phi = PhiLambda(lam)
        for r in (0.0, 0.5, 1.0, 2.0):
            x = r * _unit(rng)[0]
            for a in rng.standard_normal((20, 3)):
                num = hausdorff_area_integrand_numeric(phi, x, a)
                assert num == pytest.approx(phi_lambda_area_integrand(lam, x, a), rel=1e-7)


def test_lambda_zero_degeneration(rng):
    x = rng.uniform(-5, 5, (10_000, 3))
    a = rng.standard_normal((10_000, 3)) * rng.uniform(0.01, 10, (10_000, 1))
    got = phi_lambda_area_integrand(0.0, x, a)
    assert np.max(np.abs(got / np.linalg.norm(a, axis=1) - 1)) <= 1e-12


@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_integrands_homogeneous(rng, t):
    x, a = rng.standard_normal(3), rng.standard_normal(3)
    assert phi_lambda_area_integrand(1.3, x, t * a) == pytest.approx(t * phi_lambda_area_integrand(1.3, x, a),
                                                                     rel=1e-14)
    phi = PhiLambda(1.3)
    assert hausdorff_area_integrand_numeric(phi, x, t * a) == \
        pytest.approx(t * hausdorff_area_integrand_numeric(phi, x, a), rel=1e-13)


@given(st.floats(0, 3), arrays(float, 3, elements=st.floats(-2, 2)), st.integers(0, 2 ** 32 - 1))
def test_area_integrand_triangle_inequality(lam, x, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 200, 3)) * rng.uniform(0.1, 5, (2, 200, 1))
    lhs = phi_lambda_area_integrand(lam, x, a + b)
    rhs = phi_lambda_area_integrand(lam, x, a) + phi_lambda_area_integrand(lam, x, b)
    assert np.all(lhs <= rhs + 1e-10 * (1 + rhs))
