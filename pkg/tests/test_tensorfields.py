from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symgrad.errors import DomainError
from symgrad.orlicz import NonlinearityLaw, frob
from symgrad.tensorfields import (PolyVectorField, affine_field, check_stress_gradient, check_strain_laplacian,
                                  divergence_free_field, singular_field, grad_stress,
                                  hessian_from_sym, strain_laplacian_terms, random_field, sample,
                                  sym_laplacian, sym_laplacian_alt)


def test_dimension_cap():
    with pytest.raises(DomainError):
        PolyVectorField([{(0,) * 9: 1.0}] * 9)


def test_exact_differentiation():
    f = PolyVectorField([{(3, 1): 2.0, (0, 2): -1.0}, {(1, 1): 4.0}])
    s = sample(f, np.array([0.5, -2.0]))
    # d/dx1 u1 = 6 x1^2 x2, d/dx2 u1 = 2 x1^3 - 2 x2
    assert s.grad[0, 0] == pytest.approx(6 * 0.25 * -2.0)
    assert s.grad[0, 1] == pytest.approx(2 * 0.125 + 4.0)
    assert s.hessian[0, 0, 0] == pytest.approx(12 * 0.5 * -2.0)
    assert s.third[0, 0, 0, 0] == pytest.approx(-24.0)
    assert f.degree == 4


def test_affine_sample(rng):
    M = rng.normal(size=(3, 3))
    s = sample(affine_field(M, rng.normal(size=3)), rng.uniform(-1, 1, (5, 3)))
    assert np.allclose(s.grad, M)
    assert np.allclose(s.hessian, 0)
    assert np.allclose(sym_laplacian(s), 0)
    assert np.allclose(hessian_from_sym(s), 0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_singular_blocks(n):
    x = np.zeros(n)
    x[0], x[1] = 0.3, -0.7
    s = sample(singular_field(n), x)
    eps = np.zeros((n, n))
    eps[0, 0] = 2 * x[1]
    assert np.allclose(s.sym_grad, eps)
    lap = np.zeros(n)
    lap[1] = -2
    gd = np.zeros(n)
    gd[1] = 2
    assert np.allclose(s.laplacian, lap)
    assert s.div == pytest.approx(2 * x[1])
    assert np.allclose(s.grad_div, gd)
    assert np.allclose(sym_laplacian(s), 0)
    assert np.allclose(hessian_from_sym(s), s.hessian)
    t = strain_laplacian_terms(s)
    assert (t.lhs, t.grad_sym_sq, t.div_term) == pytest.approx((0.0, 4.0, -4.0))


def test_hessian_from_sym_exact_rational():
    rng = np.random.default_rng(3)
    comps = [{e: Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
              for e in [(2, 1, 0), (0, 3, 1), (1, 1, 1), (0, 0, 2)]} for _ in range(3)]
    f = PolyVectorField(comps)
    x = np.array([Fraction(1, 3), Fraction(-2, 5), Fraction(3, 7)], dtype=object)
    s = sample(f, x)
    assert np.all(hessian_from_sym(s) == s.hessian)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 4), degree=st.integers(2, 4), seed=st.integers(0, 2 ** 31))
def test_random_field_properties(n, degree, seed):
    g = np.random.default_rng(seed)
    f = random_field(n, degree, g)
    h = random_field(n, degree, g)
    x = g.uniform(-1, 1, (6, n))
    s, t, st_ = sample(f, x), sample(h, x), sample(f + h.scale(-2.5), x)
    assert np.allclose(st_.sym_grad, s.sym_grad - 2.5 * t.sym_grad)
    assert np.allclose(s.sym_grad, np.swapaxes(s.sym_grad, -1, -2))
    assert np.allclose(np.trace(s.sym_grad, axis1=-2, axis2=-1), s.div, atol=1e-13)
    assert np.allclose(s.hessian, np.swapaxes(s.hessian, -3, -2))
    a, b = sym_laplacian(s), sym_laplacian_alt(s)
    assert np.all(np.abs(a - b) <= 1e-12 * (1 + np.abs(a)))
    assert np.max(np.abs(hessian_from_sym(s) - s.hessian)) < 1e-12
    assert np.all(np.abs(s.div) <= np.sqrt(n) * frob(s.sym_grad) + 1e-12)
    gd2 = np.sum(s.grad_div ** 2, axis=-1)
    gs2 = np.einsum("...ijk,...ijk->...", s.grad_sym_grad, s.grad_sym_grad)
    assert np.all(gd2 <= n * gs2 + 1e-12)
    assert np.all(check_strain_laplacian(s) < 1e-10)


def test_divergence_free_field(rng):
    for n in (2, 3, 4):
        f = divergence_free_field(n, 3, rng)
        s = sample(f, rng.uniform(-1, 1, (10, n)))
        assert np.max(np.abs(s.div)) < 1e-13
        assert np.max(np.abs(s.grad_div)) < 1e-13


def test_stress_gradient_examples(rng):
    s = sample(singular_field(2), np.array([0.1, 0.5]))
    r = check_stress_gradient(NonlinearityLaw.power(3.0), s)
    assert (r.lower, r.upper) == (2.0, 2.0)
    assert r.ratio_sym == pytest.approx(2.0)
    f = random_field(3, 3, rng)
    s = sample(f, rng.uniform(-1, 1, 3))
    r = check_stress_gradient(NonlinearityLaw.power(2.0), s)
    assert r.ratio_sym == pytest.approx(1.0)
    for _ in range(20):
        s = sample(f, rng.uniform(-1, 1, 3))
        r = check_stress_gradient(NonlinearityLaw.regularized(1.7, 0.1), s)
        assert r.within_bounds and r.lower == pytest.approx(0.7)
    with pytest.raises(DomainError):
        check_stress_gradient(NonlinearityLaw.power(1.5), sample(affine_field(np.zeros((2, 2)), [0, 0]), np.zeros(2)))


def test_grad_stress_fd(rng):
    law = NonlinearityLaw.regularized(2.7, 0.05)
    f = random_field(2, 3, rng)
    x = rng.uniform(-1, 1, 2)
    G = grad_stress(law, sample(f, x))
    from symgrad.orlicz import stress
    h = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (stress(law, sample(f, x + e).sym_grad) - stress(law, sample(f, x - e).sym_grad)) / (2 * h)
        assert np.allclose(G[j], fd, rtol=1e-6, atol=1e-8)
