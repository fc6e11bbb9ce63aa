import numpy as np
import pytest

from transinfo.errors import InvalidInput, NotIrreducible
from transinfo.fixtures import random_chain, two_state
from transinfo.markov import (
    ReversibleChain, asymptotic_variance, carre_du_champ, dirichlet_form, fisher_information,
    lipschitz_poisson_constant, poincare_constant, poisson_solve, sigma_gamma_bound,
)
from transinfo.metric_measure import FiniteMetricSpace


def test_two_state_oracles(chain2):
    g = np.array([0.0, 1.0])
    assert dirichlet_form(chain2, g) == pytest.approx(0.5)
    np.testing.assert_allclose(carre_du_champ(chain2, g), [0.5, 0.5])
    assert fisher_information(chain2, [1.5, 0.5]) == pytest.approx(0.133975, abs=1e-6)
    assert poincare_constant(chain2).constant == pytest.approx(0.5)
    sol = poisson_solve(chain2, g)
    np.testing.assert_allclose(sol.G, [-0.25, 0.25], atol=1e-14)
    assert asymptotic_variance(chain2, g) == pytest.approx(0.25)
    assert sigma_gamma_bound(chain2) == pytest.approx(np.sqrt(0.5))
    br = lipschitz_poisson_constant(chain2)
    assert br.exact and br.lower == pytest.approx(0.5)


def test_complete_graph_gap():
    n = 5
    space = FiniteMetricSpace(tuple(range(n)), 1.0 - np.eye(n))
    Q = (np.ones((n, n)) - n * np.eye(n)) / n
    res = poincare_constant(ReversibleChain(space, Q))
    assert res.constant == pytest.approx(1.0)
    assert res.gap == pytest.approx(1.0)


def test_stationary_measure_and_detailed_balance():
    chain = two_state(1.0, 3.0)
    np.testing.assert_allclose(chain.weights, [0.75, 0.25])
    with pytest.raises(InvalidInput):
        ReversibleChain(chain.space, chain.Q, [0.5, 0.5])


def test_reducible_rejected():
    space = FiniteMetricSpace.line([0.0, 1.0, 2.0])
    Q = np.array([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NotIrreducible):
        ReversibleChain(space, Q)


def test_poisson_residual_and_centering(chain5):
    rng = np.random.default_rng(0)
    g = rng.normal(size=chain5.n)
    sol = poisson_solve(chain5, g)
    assert chain5.weights @ sol.G == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(-chain5.Q @ sol.G, g - chain5.weights @ g, atol=1e-10)


def test_variance_bounded_by_poincare(chain5):
    rng = np.random.default_rng(1)
    cp = poincare_constant(chain5).constant
    for _ in range(20):
        g = rng.normal(size=chain5.n)
        var = chain5.weights @ (g - chain5.weights @ g) ** 2
        assert asymptotic_variance(chain5, g) <= 2 * cp * var * (1 + 1e-10)
        assert var <= cp * dirichlet_form(chain5, g) * (1 + 1e-10)


def test_lipschitz_bracket_lower_is_attained():
    chain = random_chain(6, 11)
    br = lipschitz_poisson_constant(chain)
    assert br.lower <= br.upper + 1e-12
    # brute-force Lipschitz sources never beat the bracket
    rng = np.random.default_rng(2)
    from transinfo.metric_measure import lipschitz_norm, mcshane
    for _ in range(50):
        g = mcshane(chain.space, rng.normal(size=6))
        G = poisson_solve(chain, g).G
        assert lipschitz_norm(chain.space, G) <= br.upper * (1 + 1e-9) * max(lipschitz_norm(chain.space, g), 1e-12)
