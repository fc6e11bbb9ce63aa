import math

import numpy as np
import pytest
from scipy import optimize

from transinfo.errors import UnverifiedConstants
from transinfo.fixtures import two_state
from transinfo.metric_measure import FiniteMetricSpace
from transinfo.orlicz import (
    OrliczFunction, check_thm51a, conjugate_numeric, cor54_check, gauge_norm, orlicz_norm,
    sweep_two_state, thm51_bounds, verify_phi_sobolev,
)
from transinfo.rates import alpha_p

C2 = 2.2


@pytest.fixture(scope="module")
def entropic_C1():
    return 1.001 * sweep_two_state(two_state(), OrliczFunction.entropic(), C2, n_angles=801)


@pytest.mark.parametrize("q", [1.5, 2.0, 2.2])
def test_power_conjugate_is_young(q):
    qs = q / (q - 1)
    psi = OrliczFunction.power(q).conjugate()
    for s in (0.2, 1.0, 2.2):
        assert psi(s) == pytest.approx(s ** qs / qs, rel=1e-9)


def test_entropic_conjugate_closed_form():
    psi = OrliczFunction.entropic().conjugate()
    for s in (0.5, 1.0, 2.0, 4.0):
        expect = math.exp(s - 1) - s if s >= 1 else 0.0
        assert psi(s) == pytest.approx(expect, abs=1e-10)
        assert conjugate_numeric(OrliczFunction.entropic(), s) == pytest.approx(expect, abs=1e-7)


def test_gauge_entropic_oracle():
    phi = OrliczFunction.entropic()
    mu = np.array([0.2, 0.3, 0.5])
    c = optimize.brentq(lambda c: (1 + 1 / c) * math.log(1 + 1 / c) - 1.0, 0.1, 10)
    assert gauge_norm(phi, np.ones(3), mu) == pytest.approx(c, rel=1e-12)
    amemiya = optimize.minimize_scalar(lambda k: (1 + (1 + k) * math.log1p(k)) / k,
                                       bounds=(0.1, 10), method="bounded", options={"xatol": 1e-12})
    assert orlicz_norm(phi, np.ones(3), mu) == pytest.approx(amemiya.fun, rel=1e-9)
    assert orlicz_norm(phi, np.ones(3), mu) == pytest.approx(2.14619, abs=1e-5)


def test_norm_sandwich():
    rng = np.random.default_rng(0)
    for phi in (OrliczFunction.power(2.0), OrliczFunction.entropic(), OrliczFunction.entropic_centered()):
        for _ in range(20):
            mu = rng.dirichlet(np.ones(6))
            g = rng.normal(size=6) * 3
            N, L = gauge_norm(phi, g, mu), orlicz_norm(phi, g, mu)
            assert N * (1 - 1e-9) <= L <= 2 * N * (1 + 1e-9)


def test_linear_phi():
    phi = OrliczFunction.linear()
    mu = np.array([0.25, 0.75])
    g = np.array([-2.0, 1.0])
    assert orlicz_norm(phi, g, mu) == pytest.approx(1.25)
    assert gauge_norm(phi, g, mu) == pytest.approx(1.25)


def test_part_c_with_p2_matches_alpha_p():
    for kappa in (0.5, 2.0):
        val = thm51_bounds("c", 1.0, 1.0, 0.5, t=2.2, r=0.7, p=2, kappa=kappa, up_norm=1.0)
        assert val == pytest.approx(math.exp(-2.2 * alpha_p(2, kappa)(0.7)))


def test_sweep_two_state_and_verification(entropic_C1):
    chain = two_state()
    phi = OrliczFunction.entropic()
    assert math.isinf(sweep_two_state(chain, phi, 2.1, n_angles=11))
    assert verify_phi_sobolev(chain, phi, entropic_C1, C2, rng=0).holds
    assert not verify_phi_sobolev(chain, phi, 0.5 * entropic_C1, C2, rng=0).holds


def test_refuses_unverified_constants(entropic_C1):
    chain = two_state()
    phi = OrliczFunction.entropic()
    with pytest.raises(UnverifiedConstants):
        check_thm51a(chain, phi, 1.0, C2)
    bad = verify_phi_sobolev(chain, phi, 0.01, C2, rng=0)
    with pytest.raises(UnverifiedConstants):
        check_thm51a(chain, phi, 0.01, C2, verification=bad)
    C1 = entropic_C1
    ok = verify_phi_sobolev(chain, phi, C1, C2, rng=0)
    rep = check_thm51a(chain, phi, C1, C2, verification=ok, rng=1)
    assert rep.holds and rep.extras["b_margin"] <= 1e-8


def test_transport_entropy_comparison(entropic_C1):
    rng = np.random.default_rng(3)
    space = FiniteMetricSpace.line(np.linspace(0, 2, 7))
    chain = two_state()
    phi = OrliczFunction.entropic()
    C1 = entropic_C1
    for _ in range(30):
        mu = rng.dirichlet(np.ones(7))
        f = rng.dirichlet(np.ones(7)) / mu
        for p in (1.0, 2.0):
            m1, m2 = cor54_check(space, mu, f, p)
            assert m1 <= 1e-10 and m2 is None
    for _ in range(30):
        f = rng.dirichlet(np.ones(2)) / chain.weights
        m1, m2 = cor54_check(chain.space, chain.weights, f, 1.0, chain=chain, phi=phi, C1=C1, C2=C2)
        assert m1 <= 1e-10 and m2 <= 1e-10
