import math

import numpy as np
import pytest

from symgrad.errors import DomainError
from symgrad.identities import (admissible_range, alldim_theta_interval, claim_2d,
                                claim_2d_quadratic, identity_alldim_residual,
                                identity_alldim_terms, identity_lowdim_residual,
                                identity_lowdim_terms, identity_report, lowdim_ratio_search,
                                lowdim_theta_floor, q_matrix, q_matrix_spectrum, q_null_vector,
                                random_derivative_samples, reduced_inequality_alldim,
                                reduced_inequality_lowdim, sample_from_coords,
                                second_derivative_coords, sweep_reduced)
from symgrad.orlicz import NonlinearityLaw, eval_a, frob, stress
from symgrad.tensorfields import (W_field, affine_field, divergence_free_field, singular_field,
                                  random_field, sample)

REG = NonlinearityLaw.regularized


def _fd_divergence(fn, x, h=1e-5):
    """Central-difference divergence of a vector- or matrix-valued map (last index summed)."""
    n = len(x)
    out = 0.0
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        out = out + (fn(x + e)[..., j] - fn(x - e)[..., j]) / (2 * h)
    return out


@pytest.mark.parametrize("law", [REG(3.0, 0.1), REG(1.7, 0.01), NonlinearityLaw.power(2.5)])
def test_identity_terms_against_finite_differences(law, rng):
    f = random_field(3, 3, rng)
    x = rng.uniform(-0.5, 0.5, 3)
    s = sample(f, x)
    a = float(eval_a(law, frob(s.sym_grad)))
    div_A = _fd_divergence(lambda y: stress(law, sample(f, y).sym_grad), x)
    lhs_fd = 2 * a * float(div_A @ s.laplacian)
    t = identity_lowdim_terms(law, s)
    assert t["lhs"] == pytest.approx(lhs_fd, rel=1e-6)

    def a2W(y):
        sy = sample(f, y)
        return float(eval_a(law, frob(sy.sym_grad))) ** 2 * W_field(sy)

    assert t["div_term"] == pytest.approx(_fd_divergence(a2W, x), rel=1e-6, abs=1e-8)


def test_identities_on_affine_fields(rng):
    f = affine_field(rng.normal(size=(3, 3)), rng.normal(size=3))
    for fn in (identity_lowdim_terms, identity_alldim_terms):
        t = fn(REG(1.7, 0.1), f, rng.uniform(-1, 1, 3))
        assert abs(t["lhs"]) < 1e-14 and abs(t["rhs"]) < 1e-14


@pytest.mark.parametrize("law", [REG(3.0, 0.1), REG(1.8, 0.05), REG(2.0, 0.01)])
def test_identity_residuals_random(law, rng):
    worst_low = worst_all = 0.0
    for _ in range(25):
        f = random_field(3, 3, rng)
        x = rng.uniform(-1, 1, (4, 3))
        worst_low = max(worst_low, float(np.max(identity_lowdim_residual(law, f, x))))
        worst_all = max(worst_all, float(np.max(identity_alldim_residual(law, f, x))))
    assert worst_low < 1e-9 and worst_all < 1e-9


def test_identity_at_zero_strain():
    f = random_field(2, 3, np.random.default_rng(0))
    # u - (grad u(0)) x has zero strain at the origin
    s0 = sample(f, np.zeros(2))
    g = affine_field(-s0.grad, -f(np.zeros(2)))
    h = f + g
    assert frob(sample(h, np.zeros(2)).sym_grad) < 1e-15
    assert identity_lowdim_residual(REG(1.6, 0.1), h, np.zeros(2)) < 1e-12
    with pytest.raises(DomainError):
        identity_lowdim_residual(NonlinearityLaw.power(1.5), h, np.zeros(2))


def test_pure_power_singular():
    x = np.array([0.2, 0.5])
    assert identity_lowdim_residual(NonlinearityLaw.power(2.5), singular_field(2), x) < 1e-12
    assert identity_alldim_residual(NonlinearityLaw.power(2.5), singular_field(2), x) < 1e-12


def test_divergence_free_rhs_agree(rng):
    law = REG(2.4, 0.05)
    f = divergence_free_field(3, 3, rng)
    x = rng.uniform(-1, 1, (10, 3))
    lo, al = identity_lowdim_terms(law, f, x), identity_alldim_terms(law, f, x)
    assert np.allclose(lo["rhs"], al["rhs"], rtol=1e-11, atol=1e-11)
    assert np.all(identity_alldim_residual(law, f, x) < 1e-9)


def test_identity_report(rng):
    rep = identity_report("alldim", REG(3.0, 0.1), random_field(2, 3, rng), rng.uniform(-1, 1, (7, 2)))
    assert rep.points == 7 and rep.max_relative_residual < 1e-9


def test_reduced_domains():
    s = random_derivative_samples(3, 5, np.random.default_rng(0))
    with pytest.raises(DomainError):
        reduced_inequality_lowdim(s, lowdim_theta_floor(3) - 0.01)
    with pytest.raises(DomainError):
        reduced_inequality_alldim(s, alldim_theta_interval(3)[1] + 0.01)
    s8 = random_derivative_samples(8, 2, np.random.default_rng(0))
    with pytest.raises(DomainError):
        reduced_inequality_lowdim(s8, 0.0)
    z = sample(affine_field(np.zeros((2, 2)), [0, 0]), np.zeros(2))
    with pytest.raises(DomainError):
        reduced_inequality_alldim(z, 0.0)


def test_reduced_affine_and_theta0(rng):
    z = sample(affine_field(rng.normal(size=(2, 2)), [0, 0]), np.zeros(2))
    assert reduced_inequality_lowdim(z, 0.0) == pytest.approx(0.0)
    s = random_derivative_samples(4, 50, rng)
    slack = reduced_inequality_alldim(s, 0.0)
    expect = 0.5 * np.sum(s.laplacian ** 2, -1) + 0.5 * np.sum(s.grad_div ** 2, -1)
    assert np.allclose(slack, expect)


@pytest.mark.parametrize("kind,n,theta", [("lowdim", 7, 0.0), ("lowdim", 3, -0.3),
                                          ("alldim", 8, 0.49), ("alldim", 3, -0.33)])
def test_reduced_sweeps(kind, n, theta, rng):
    assert sweep_reduced(kind, n, theta, 10000, rng).holds


def test_ratio_search_is_informational(rng):
    assert np.isfinite(lowdim_ratio_search(3, -0.5, 2000, rng))


def test_q_matrix():
    lam = q_matrix_spectrum()
    assert abs(lam[0]) < 1e-12 and lam[1] > 0 and lam[2] > 0
    assert abs(np.linalg.det(q_matrix())) < 1e-12
    Q = q_matrix()
    assert np.allclose(Q, Q.T)


def test_claim_2d(rng):
    first, second = rng.uniform(-1, 1, (2, 20000, 3))
    s = sample_from_coords(first, second)
    f2, s2 = second_derivative_coords(s)
    assert np.array_equal(f2, first) and np.array_equal(s2, second)
    direct = claim_2d(s)
    assert np.allclose(direct, claim_2d_quadratic(first, second), rtol=1e-12, atol=1e-12)
    assert direct.min() >= -1e-12
    v = q_null_vector()
    assert abs(float(claim_2d(sample_from_coords(v, np.zeros(3))))) < 1e-12
    # the claim also holds on genuine planar fields
    f = random_field(2, 3, rng)
    assert np.all(claim_2d(sample(f, rng.uniform(-1, 1, (50, 2)))) >= -1e-12)
    with pytest.raises(DomainError):
        claim_2d(sample(random_field(3, 2, rng), np.zeros(3)))


def test_admissible_range():
    r = admissible_range(8)
    assert r.p_minus == pytest.approx(1.75) and r.p_plus == 2.5
    assert admissible_range(2).p_minus == pytest.approx(1.612, abs=1e-3)
    assert admissible_range(3).p_minus == pytest.approx(2 - 1 / 3)
    assert all(math.isinf(admissible_range(n).p_plus) for n in range(2, 8))
    pm = [admissible_range(n).p_minus for n in range(3, 30)]
    pp = [admissible_range(n).p_plus for n in range(8, 30)]
    assert np.all(np.diff(pm) > 0) and np.all(np.diff(pp) < 0)
    assert admissible_range(21).p_minus < 2 * 21 / 23
    assert admissible_range(2).contains(1.7) and not admissible_range(8).contains(2.6)
    with pytest.raises(DomainError):
        admissible_range(1)
