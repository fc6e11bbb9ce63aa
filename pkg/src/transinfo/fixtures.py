"""Random and named chains used by the test and acceptance suites and the CLI."""

from __future__ import annotations

import numpy as np

from .diffusion import EXAMPLES, make_example
from .errors import InvalidInput
from .markov import ReversibleChain, sigma_gamma_bound
from .metric_measure import FiniteMetricSpace, Measure


def random_chain(n: int, rng=None, edge_prob: float = 0.7, dim: int = 2) -> ReversibleChain:
    """Reversible chain on ``n`` random points of the unit square.

    Conductances ``c_ij`` are uniform on a random graph that always contains
    the path ``0-1-...-(n-1)``; ``mu ~ Dir(1)`` and ``Q_ij = c_ij / mu_i``.
    """
    rng = np.random.default_rng(rng)
    if n < 2:
        raise InvalidInput("n must be >= 2")
    space = FiniteMetricSpace.from_points(rng.random((n, dim)))
    mu = rng.dirichlet(np.ones(n))
    A = rng.random((n, n)) * (rng.random((n, n)) < edge_prob)
    A = np.triu(A, 1)
    A[np.arange(n - 1), np.arange(1, n)] += 0.1
    A = A + A.T
    Q = A / mu[:, None]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return ReversibleChain(space, Q, Measure(mu))


def random_birth_death(n: int, rng=None) -> ReversibleChain:
    """Birth-death chain on sorted uniform points of ``[0, 1]`` with random rates."""
    rng = np.random.default_rng(rng)
    if n < 2:
        raise InvalidInput("n must be >= 2")
    x = np.sort(rng.random(n))
    x = x + np.arange(n) * 1e-9  # keep points distinct
    mu = rng.dirichlet(np.ones(n))
    c = rng.uniform(0.2, 2.0, n - 1)
    Q = np.zeros((n, n))
    i = np.arange(n - 1)
    Q[i, i + 1] = c / mu[:-1]
    Q[i + 1, i] = c / mu[1:]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return ReversibleChain(FiniteMetricSpace.line(x), Q, Measure(mu))


def normalize_sigma(chain: ReversibleChain, target: float = 1.0) -> ReversibleChain:
    """Rescale time so that ``sigma_gamma_bound`` equals ``target``."""
    s = sigma_gamma_bound(chain)
    if s <= 0:
        raise InvalidInput("chain has zero sigma")
    return ReversibleChain(chain.space, chain.Q * (target / s) ** 2, chain.mu, chain.require_irreducible)


def two_state(a: float = 1.0, b: float = 1.0, d: float = 1.0) -> ReversibleChain:
    """Rates ``0 -> 1`` at ``a`` and ``1 -> 0`` at ``b`` on two points at distance ``d``."""
    if a <= 0 or b <= 0 or d <= 0:
        raise InvalidInput("rates and distance must be positive")
    Q = np.array([[-a, a], [b, -b]], dtype=float)
    return ReversibleChain(FiniteMetricSpace.line([0.0, d]), Q)


FIXTURES = {
    "ou": "discretized Ornstein-Uhlenbeck, params sigma, n (default 1.0, 800; grid +-6 sigma)",
    "reflected_bm": "reflected Brownian motion on [0, D], params D, n (default 1.0, 200)",
    "quartic": "V = x^4 + 4|x|^3 sin^2 x + |x|^beta, params beta in (2, 3), n",
    "convex": "V = x^2/(2 s^2) + x^4/4, params s, n",
    "two_interval": "reflected BM on [-2,-1] U [1,2], no crossing, param n (per piece)",
    "two_state": "2-state chain, params a, b, d",
    "random_chain": "random reversible chain, params n, seed, normalize (bool)",
    "birth_death": "random birth-death chain, params n, seed, normalize (bool)",
}


def build_fixture(spec: dict):
    """``(chain, model_or_None, grid_or_None)`` for a fixture document ``{"name": ..., params}``."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in FIXTURES:
        raise InvalidInput(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}")
    if name in EXAMPLES:
        n = spec.pop("n", None)
        allowed = {"ou": {"sigma"}, "reflected_bm": {"D"}, "quartic": {"beta"}, "convex": {"s"},
                   "two_interval": set()}[name]
        extra = set(spec) - allowed
        if extra:
            raise InvalidInput(f"unknown parameters for {name}: {sorted(extra)}")
        ex = make_example(name, n=None if n is None else int(n), **spec)
        return ex.chain, ex.model, ex.grid
    if name == "two_state":
        extra = set(spec) - {"a", "b", "d"}
        if extra:
            raise InvalidInput(f"unknown parameters for two_state: {sorted(extra)}")
        return two_state(**spec), None, None
    extra = set(spec) - {"n", "seed", "normalize"}
    if extra:
        raise InvalidInput(f"unknown parameters for {name}: {sorted(extra)}")
    n = int(spec.get("n", 5))
    seed = spec.get("seed", 0)
    build = random_chain if name == "random_chain" else random_birth_death
    chain = build(n, seed)
    if spec.get("normalize", False):
        chain = normalize_sigma(chain)
    return chain, None, None
