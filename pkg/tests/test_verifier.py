import json
import math

import numpy as np
import pytest

from transinfo.diffusion import default_grid, discretize, ou_model
from transinfo.fixtures import two_state
from transinfo.metric_measure import FiniteMetricSpace, relative_entropy, wasserstein
from transinfo.verifier.bounds import tp_check, variance_deviation_bound
from transinfo.verifier.equivalence import chernoff_deviation_bound, intrinsic_exponent, lambda_max
from transinfo.verifier.hopf_lax import bobkov_gotze_w2_check, hopf_lax
from transinfo.verifier.reports import InequalityReport
from transinfo.verifier.bounds import best_variance_deviation_bound
from transinfo.verifier.hopf_lax import composed_hopf_lax


def test_lambda_max_two_state(chain2):
    assert lambda_max(chain2, [0.0, 1.0], 1.0) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)
    val, g = lambda_max(chain2, [0.0, 1.0], 1.0, return_vector=True)
    assert chain2.weights @ g ** 2 == pytest.approx(1.0)
    assert np.all(g > 0)


def test_lambda_max_variational(chain5):
    rng = np.random.default_rng(0)
    u = rng.normal(size=chain5.n)
    top = lambda_max(chain5, u, 0.7)
    from transinfo.markov import dirichlet_form
    for _ in range(200):
        g = rng.normal(size=chain5.n)
        g /= math.sqrt(chain5.weights @ g ** 2)
        assert 0.7 * chain5.weights @ (u * g * g) - dirichlet_form(chain5, g) <= top + 1e-10


def test_chernoff_intrinsic_matches_grid(chain2):
    u = np.array([0.0, 1.0])
    t, r = 10.0, 0.25
    lams = np.linspace(0, 20, 200001)
    grid = min(lambda_max(chain2, u, l) - l * 0.75 for l in lams[::100])
    fine = min(lambda_max(chain2, u, l) - l * 0.75 for l in np.linspace(0, 4, 40001))
    expo = intrinsic_exponent(chain2, u, 0.75)
    assert expo <= min(grid, fine) + 1e-10
    assert expo == pytest.approx(fine, abs=1e-8)
    bound = chernoff_deviation_bound(chain2, [1.0, 1.0], u, t, r)
    assert bound == pytest.approx(math.exp(t * expo))


def test_hopf_lax_semigroup_and_scaling():
    rng = np.random.default_rng(1)
    x = np.sort(rng.uniform(0, 4, 15))
    space = FiniteMetricSpace.line(x)
    g = rng.normal(size=15)
    nested = hopf_lax(space, hopf_lax(space, g, 0.5), 0.3)
    np.testing.assert_allclose(composed_hopf_lax(space, g, 0.3, 0.5), nested, atol=1e-12)
    # Q_t Q_s >= Q_{t+s} on any metric space
    assert np.all(nested >= hopf_lax(space, g, 0.8) - 1e-12)
    # d -> c d is t -> t / c^2
    wide = FiniteMetricSpace.line(2.0 * x)
    np.testing.assert_allclose(hopf_lax(wide, g, 0.8), hopf_lax(space, g, 0.2), atol=1e-12)
    assert np.all(hopf_lax(space, g, 0.5) <= g)


def test_bobkov_gotze_gaussian():
    model = ou_model(1.0)
    chain = discretize(model, default_grid(model, 400))
    x = chain.space.coords
    mu = chain.weights
    # linear functions are the equality case of the dual criterion
    assert bobkov_gotze_w2_check(chain.space, mu, 0.8 * x, 1.0) == pytest.approx(0.0, abs=2e-3)
    rng = np.random.default_rng(2)
    for _ in range(20):
        c = rng.normal(size=3)
        g = c[0] * x + c[1] * np.sin(x) + c[2] * np.abs(x)
        assert bobkov_gotze_w2_check(chain.space, mu, g, 1.0) <= 2e-3
    assert bobkov_gotze_w2_check(chain.space, mu, 2.0 * x, 0.5) > 0.1


def test_variance_deviation_bound_by_hand():
    V, c_P, sC, t, r, d = 0.8, 1.3, 0.9, 20.0, 0.4, 0.5
    a = 1.5 * V
    expect = math.exp(-t * r * r / (a + math.sqrt(a * a + 8 * c_P * sC ** 4 * r * r / (d * V))))
    assert variance_deviation_bound(V, c_P, sC, t, r, d) == pytest.approx(expect, rel=1e-14)
    best, delta = best_variance_deviation_bound(V, c_P, sC, t, r)
    assert best <= expect
    for dd in (0.1, 0.3, 1.0, 3.0):
        assert best <= variance_deviation_bound(V, c_P, sC, t, r, dd) * (1 + 1e-9)


def test_tp_check_two_state():
    chain = two_state()
    f = np.array([1.6, 0.4])
    gamma = lambda h: math.sqrt(2.0 * h)
    expected = wasserstein(chain.space, f * chain.weights, chain.weights, 2) - gamma(relative_entropy(f, chain.weights))
    assert tp_check(chain.space, chain.weights, f, gamma) == pytest.approx(expected)


def test_report_round_trip_and_hash():
    rep = InequalityReport("w1i", {"C": 0.5}, -0.01, {"f": [1.0, 1.0]}, 10, 1e-8,
                           ("note",), {"inf_value": math.inf})
    doc = rep.to_dict()
    back = InequalityReport.from_json(json.dumps(doc))
    assert back.kind == "w1i" and back.worst_margin == -0.01 and back.holds
    assert math.isinf(back.extras["inf_value"])
    doc["worst_margin"] = 5.0
    with pytest.raises(ValueError):
        InequalityReport.from_dict(doc)
