import numpy as np
import pytest

from transinfo.errors import ConstraintViolation, DimensionMismatch, InvalidInput
from transinfo.metric_measure import (
    Density, FiniteMetricSpace, Measure, TestFunctionPairFamily, kantorovich_duality_gap,
    lipschitz_family, lipschitz_norm, mcshane, optimal_transport, relative_entropy, sample_a2,
    total_variation, transport_cost, wasserstein, wasserstein_1d,
)


def test_relative_entropy_oracles():
    assert relative_entropy([2.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(2))
    assert relative_entropy([1.0, 2.0, 0.0], [0.5, 0.25, 0.25]) == pytest.approx(0.5 * np.log(2))
    assert relative_entropy([1.0, 1.0], [0.3, 0.7]) == 0.0


def test_total_variation():
    assert total_variation([2.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)
    assert total_variation([1.0, 1.0, 1.0], [0.2, 0.3, 0.5]) == 0.0


def test_wasserstein_three_point_line():
    space = FiniteMetricSpace.line([0.0, 1.0, 2.0])
    assert wasserstein(space, [1, 0, 0], [0, 1, 0]) == pytest.approx(1.0)
    assert wasserstein(space, [0.5, 0, 0.5], [0, 1, 0]) == pytest.approx(1.0)
    assert wasserstein(space, [1, 0, 0], [0, 0, 1], p=2) == pytest.approx(2.0)


def test_wasserstein_1d_matches_lp():
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(0, 3, 12))
    space = FiniteMetricSpace.line(x)
    for p in (1.0, 2.0, 3.0):
        for _ in range(5):
            a, b = rng.dirichlet(np.ones(12)), rng.dirichlet(np.ones(12))
            assert wasserstein_1d(x, a, b, p) == pytest.approx(wasserstein(space, a, b, p), rel=1e-7)


def test_transport_solution_is_optimal_and_dual_feasible():
    rng = np.random.default_rng(1)
    space = FiniteMetricSpace.from_points(rng.uniform(size=(7, 2)))
    a, b = rng.dirichlet(np.ones(7)), rng.dirichlet(np.ones(7))
    sol = optimal_transport(space, a, b, p=2)
    np.testing.assert_allclose(sol.plan.sum(axis=1), a, atol=1e-12)
    np.testing.assert_allclose(sol.plan.sum(axis=0), b, atol=1e-12)
    assert np.max(sol.u[:, None] - sol.v[None, :] - space.dist ** 2) <= 1e-9
    assert a @ sol.u - b @ sol.v == pytest.approx(sol.cost, abs=1e-9)
    assert kantorovich_duality_gap(space, b, a, 2, (sol.u, sol.v)) == pytest.approx(0.0, abs=1e-9)


def test_duality_gap_rejects_infeasible_potentials():
    space = FiniteMetricSpace.line([0.0, 1.0])
    with pytest.raises(ConstraintViolation):
        kantorovich_duality_gap(space, [0.5, 0.5], [1, 0], 1, ([5.0, 0.0], [0.0, 0.0]))


def test_transport_cost_recovers_w1():
    rng = np.random.default_rng(2)
    space = FiniteMetricSpace.from_points(rng.uniform(size=(6, 2)))
    mu = rng.dirichlet(np.ones(6))
    nu = rng.dirichlet(np.ones(6))
    fam = lipschitz_family(space, 1.0, rng=3, measures=[nu], mu=mu)
    assert fam.symmetric
    f = Density.from_measure(nu, Measure(mu))
    assert transport_cost(f, mu, fam) == pytest.approx(wasserstein(space, mu, nu), rel=1e-8)
    assert sample_a2(fam, 50, rng=4) == 1.0


def test_lipschitz_family_p2_constraint():
    space = FiniteMetricSpace.line(np.linspace(0, 1, 5))
    fam = lipschitz_family(space, 2.0, rng=0)
    assert fam.check_cost_constraint(space) <= 1e-9


def test_family_rejects_u_above_v():
    with pytest.raises(ConstraintViolation):
        TestFunctionPairFamily([[1.0, 0.0]], [[0.0, 0.0]])


def test_mcshane_is_one_lipschitz():
    rng = np.random.default_rng(5)
    space = FiniteMetricSpace.from_points(rng.normal(size=(8, 2)))
    u = mcshane(space, rng.normal(size=8) * 3)
    assert lipschitz_norm(space, u) <= 1 + 1e-12


def test_input_validation():
    with pytest.raises(InvalidInput):
        Density([0.5, 0.5], Measure([0.5, 0.5]))
    with pytest.raises(DimensionMismatch):
        relative_entropy([1.0, 1.0], [1.0])
    with pytest.raises(InvalidInput):
        wasserstein_1d([1.0, 0.0], [0.5, 0.5], [0.5, 0.5])
