import math

import numpy as np
import pytest

from transinfo.errors import GammaDivergent, InvalidInput
from transinfo.rates import (
    RateFunction, alpha_from_beta, alpha_p, beta_from_alpha_curvature, gamma_from_beta,
    power_lsi_alpha, tilde_alpha,
)


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 2.5])
def test_gaussian_conjugate(lam):
    assert RateFunction.gaussian(1.0).conj(lam) == pytest.approx(lam ** 2)
    assert RateFunction.gaussian(2.0).conj(lam) == pytest.approx(4 * lam ** 2)


def test_zero_rate_conjugate_is_support_function():
    assert RateFunction.zero(r_max=3.0).conj(2.0) == pytest.approx(6.0)


def test_numeric_conjugate_matches_closed_form():
    a = RateFunction.custom(lambda r: r ** 3 / 3.0)
    for lam in (0.5, 1.0, 4.0):
        # sup_r lam r - r^3/3 at r = sqrt(lam)
        assert a.conj(lam) == pytest.approx(2.0 / 3.0 * lam ** 1.5, rel=1e-7)


def test_tilde():
    C = 1.7
    t = tilde_alpha(RateFunction.gaussian(C))
    assert t(2.0) == pytest.approx(4.0 / (2 * C))
    t4 = RateFunction.power(1.0, 4.0).tilde()
    assert t4(1.5) == pytest.approx(2 * 1.5 ** 3 / 3)
    # quadrature route agrees with the closed form
    q = RateFunction.custom(lambda r: r ** 4).tilde()
    assert q(1.5) == pytest.approx(2 * 1.5 ** 3 / 3, rel=1e-9)


def test_inverse():
    a = RateFunction.power(2.0, 2.0)
    assert a.inverse(8.0) == pytest.approx(2.0)
    assert RateFunction.zero(r_max=1.0).inverse(0.5) == pytest.approx(1.0)


def test_beta_from_alpha_curvature_oracle():
    beta = beta_from_alpha_curvature(RateFunction.power(1.0, 1.0))
    for r in (0.1, 1.0, 5.0):
        assert beta(r) == pytest.approx((r * r / 8) ** (1 / 3), rel=1e-10)


def test_alpha_p():
    assert alpha_p(1, 1)(math.sqrt(3)) == pytest.approx(1.0)
    assert alpha_p(2, 4)(2.0) == pytest.approx(1.0)
    assert alpha_p(3, 2)(1e-8) == pytest.approx(1.5 * 1e-16 / 2, rel=1e-6)


@pytest.mark.parametrize("delta,C", [(0.5, 1.0), (1.0, 2.0), (1.5, 0.7)])
def test_alpha_from_beta_matches_closed_form(delta, C):
    alpha = alpha_from_beta(lambda r: r ** delta / C)
    exact = power_lsi_alpha(delta, C)
    for s in (0.05, 0.5, 2.0):
        assert alpha(s) == pytest.approx(float(exact(s)), rel=1e-7)


def test_gamma_divergent():
    with pytest.raises(GammaDivergent):
        gamma_from_beta(lambda r: r ** 2)


def test_from_grid_checks_convexity():
    r = np.linspace(0, 1, 11)
    RateFunction.from_grid(r, r ** 2)
    with pytest.raises(InvalidInput):
        RateFunction.from_grid(r, np.sqrt(r))


def test_dict_round_trip():
    a = RateFunction.power(0.3, 2.5)
    b = RateFunction.from_dict(a.to_dict())
    assert b(1.7) == pytest.approx(a(1.7))
