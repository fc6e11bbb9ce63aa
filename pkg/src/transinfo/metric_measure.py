"""Finite metric measure spaces, densities and transport functionals.

Everything here works on a finite set of labelled points. Measures and
densities are plain weight vectors; the small wrapper classes only validate
them. Wasserstein distances are computed exactly with a network simplex
solver (POT's ``emd``), with a quantile-coupling fast path on ordered grids.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstraintViolation, DimensionMismatch, InvalidInput, TransinfoError

for _backend in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")

_ot = None


def _emd():
    global _ot
    if _ot is None:
        import ot

        _ot = ot
    return _ot.emd


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labelled points with a distance matrix and a base point ``x0``.

    ``coords`` is set when the space is an ordered subset of the real line
    with ``dist = |x_i - x_j|``; it enables the quantile fast path.
    """

    labels: tuple
    dist: np.ndarray
    base_index: int = 0
    coords: np.ndarray | None = None
    check_triangle: bool = field(default=True, repr=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidInput("dist must be a square matrix")
        n = d.shape[0]
        if len(self.labels) != n:
            raise DimensionMismatch(f"{len(self.labels)} labels for {n} points")
        scale = max(1.0, float(np.max(np.abs(d))) if n else 1.0)
        if not np.allclose(d, d.T, rtol=0, atol=1e-12 * scale):
            raise InvalidInput("dist is not symmetric")
        if np.any(np.abs(np.diag(d)) > 0):
            raise InvalidInput("dist must vanish on the diagonal")
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            raise InvalidInput("distinct points must have positive distance")
        if self.check_triangle:
            for k in range(n):
                if np.any(d > d[:, k, None] + d[None, k, :] + 1e-12 * scale):
                    raise InvalidInput("triangle inequality fails")
        if not 0 <= self.base_index < n:
            raise InvalidInput("base_index out of range")
        d = 0.5 * (d + d.T)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.coords is not None:
            c = np.array(self.coords, dtype=float)
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @classmethod
    def line(cls, grid, labels=None, base_index=0):
        """Strictly increasing points on the real line with |x - y|."""
        x = np.asarray(grid, dtype=float)
        if x.ndim != 1 or np.any(np.diff(x) <= 0):
            raise InvalidInput("grid must be strictly increasing")
        labels = tuple(range(len(x))) if labels is None else labels
        return cls(labels, np.abs(x[:, None] - x[None, :]), base_index, coords=x,
                   check_triangle=False)

    @classmethod
    def from_points(cls, points, labels=None, base_index=0):
        """Euclidean distances between rows of ``points``."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if p.shape[0] == 1 and p.shape[1] > 1:
            p = p.T
        d = np.sqrt(np.sum((p[:, None, :] - p[None, :, :]) ** 2, axis=-1))
        labels = tuple(range(len(p))) if labels is None else labels
        return cls(labels, d, base_index)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def is_line(self) -> bool:
        return self.coords is not None

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def base_distance(self) -> np.ndarray:
        """``d(., x0)``."""
        return self.dist[:, self.base_index].copy()


@dataclass(frozen=True, eq=False)
class Measure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise InvalidInput("weights must be a vector")
        if np.any(w < 0):
            raise InvalidInput("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.weights > 0))

    @classmethod
    def normalized(cls, weights):
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())


@dataclass(frozen=True, eq=False)
class Density:
    """Density ``f`` of a probability measure ``nu = f mu``."""

    f: np.ndarray
    mu: Measure

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        mu = self.mu if isinstance(self.mu, Measure) else Measure(self.mu)
        if f.shape != mu.weights.shape:
            raise DimensionMismatch("density and measure have different lengths")
        if np.any(f < 0):
            raise InvalidInput("density must be non-negative")
        mass = float(mu.weights @ f)
        if abs(mass - 1.0) > 1e-10:
            raise InvalidInput(f"density integrates to {mass!r}, not 1")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "mu", mu)

    def measure(self) -> Measure:
        return Measure.normalized(self.f * self.mu.weights)

    @classmethod
    def from_measure(cls, nu, mu):
        """Density of ``nu`` w.r.t. ``mu``; ``nu`` must vanish off supp(mu)."""
        nu_w, mu_w = weights_of(nu), weights_of(mu)
        if np.any((mu_w == 0) & (nu_w > 0)):
            raise InvalidInput("nu is not absolutely continuous w.r.t. mu")
        f = np.divide(nu_w, mu_w, out=np.zeros_like(nu_w), where=mu_w > 0)
        return cls(f, mu if isinstance(mu, Measure) else Measure(mu_w))


def weights_of(m) -> np.ndarray:
    if isinstance(m, Measure):
        return m.weights
    if isinstance(m, Density):
        return m.f * m.mu.weights
    return np.asarray(m, dtype=float)


def density_of(f) -> np.ndarray:
    if isinstance(f, Density):
        return f.f
    return np.asarray(f, dtype=float)


def _pair(f, mu):
    f_arr, mu_arr = density_of(f), weights_of(mu)
    if f_arr.shape != mu_arr.shape:
        raise DimensionMismatch(f"shapes {f_arr.shape} and {mu_arr.shape}")
    return f_arr, mu_arr


def relative_entropy(f, mu) -> float:
    """``H(f mu | mu) = sum mu_i f_i log f_i`` with ``0 log 0 = 0``."""
    f, mu = _pair(f, mu)
    terms = np.zeros_like(f)
    pos = f > 0
    terms[pos] = f[pos] * np.log(f[pos])
    return max(float(mu @ terms), 0.0)


def total_variation(f, mu) -> float:
    """``mu(|f - 1|)``, i.e. the total variation norm of ``f mu - mu``."""
    f, mu = _pair(f, mu)
    return float(mu @ np.abs(f - 1.0))


def _check_same(space, *measures):
    for m in measures:
        if len(m) != space.n:
            raise DimensionMismatch(f"measure of length {len(m)} on a {space.n}-point space")


def _normalize(w):
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return w / w.sum()


@dataclass(frozen=True)
class TransportSolution:
    """Optimal coupling of ``nu`` (rows) and ``mu`` (columns) with dual potentials.

    The potentials satisfy ``u(x) - v(y) <= d(x, y)**p`` and
    ``nu(u) - mu(v) = cost``.
    """

    plan: np.ndarray
    cost: float
    u: np.ndarray
    v: np.ndarray
    p: float

    @property
    def distance(self) -> float:
        return self.cost ** (1.0 / self.p)


def optimal_transport(space: FiniteMetricSpace, nu, mu, p: float = 1.0) -> TransportSolution:
    """Solve the exact transport LP between ``nu`` and ``mu`` for cost ``d**p``."""
    if p < 1:
        raise InvalidInput("p must be >= 1")
    nu_w, mu_w = _normalize(weights_of(nu)), _normalize(weights_of(mu))
    _check_same(space, nu_w, mu_w)
    cost = space.dist ** p
    plan, log = _emd()(nu_w, mu_w, cost, numItermax=10_000_000, log=True)
    if log.get("warning"):
        raise TransinfoError(f"transport solver failed: {log['warning']}")
    # c-transform repairs dual feasibility on zero-mass points and only raises nu(u)
    v = -np.asarray(log["v"], dtype=float)
    u = np.min(v[None, :] + cost, axis=1)
    value = max(float(np.sum(plan * cost)), 0.0)
    return TransportSolution(plan, value, u, v, p)


def wasserstein(space: FiniteMetricSpace, mu, nu, p: float = 1.0) -> float:
    """``W_p(nu, mu) = (min_pi sum pi_ij d_ij^p)^(1/p)`` by exact transport."""
    return optimal_transport(space, nu, mu, p).distance


def wasserstein_1d(grid, mu, nu, p: float = 1.0) -> float:
    """``W_p`` on an increasing real grid through the quantile coupling."""
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or np.any(np.diff(x) <= 0):
        raise InvalidInput("grid must be strictly increasing")
    a, b = _normalize(weights_of(mu)), _normalize(weights_of(nu))
    if len(a) != len(x) or len(b) != len(x):
        raise DimensionMismatch("measures do not live on the grid")
    if p == 1:
        # W_1 = int |F_mu - F_nu| dx, exact and cancellation free
        diff = np.cumsum(a - b)[:-1]
        return float(np.abs(diff) @ np.diff(x))
    ca, cb = np.cumsum(a), np.cumsum(b)
    ca[-1] = cb[-1] = 1.0
    qs = np.unique(np.concatenate([[0.0], ca, cb]))
    qs = qs[qs <= 1.0]
    mids = 0.5 * (qs[1:] + qs[:-1])
    ia = np.minimum(np.searchsorted(ca, mids), len(x) - 1)
    ib = np.minimum(np.searchsorted(cb, mids), len(x) - 1)
    cost = float(np.diff(qs) @ np.abs(x[ia] - x[ib]) ** p)
    return cost ** (1.0 / p)


def transport_distance(space: FiniteMetricSpace, mu, nu, p: float = 1.0) -> float:
    """``wasserstein`` with the quantile shortcut when the space is a line."""
    if space.is_line:
        return wasserstein_1d(space.coords, mu, nu, p)
    return wasserstein(space, mu, nu, p)


def lipschitz_norm(space: FiniteMetricSpace, g) -> float:
    g = np.asarray(g, dtype=float)
    if space.n < 2:
        return 0.0
    if space.is_line:
        return float(np.max(np.abs(np.diff(g)) / np.diff(space.coords)))
    off = ~np.eye(space.n, dtype=bool)
    return float(np.max(np.abs(g[:, None] - g[None, :])[off] / space.dist[off]))


def mcshane(space: FiniteMetricSpace, values, power: float = 1.0) -> np.ndarray:
    """``u_i = min_j (values_j + d(i, j)**power)``; 1-Lipschitz when ``power == 1``."""
    values = np.asarray(values, dtype=float)
    return np.min(values[None, :] + space.dist ** power, axis=1)


@dataclass(frozen=True, eq=False)
class TestFunctionPairFamily:
    """A finite family of pairs ``(u, v)`` defining ``T_V(nu, mu) = sup nu(u) - mu(v)``.

    For ``kind == "lipschitz_p"`` every pair satisfies ``u(x) - v(y) <= d(x, y)**p``.
    For custom families only ``u <= v`` is enforced; the second admissibility
    condition can merely be sampled, see :func:`sample_a2`.
    """

    __test__ = False

    u: np.ndarray
    v: np.ndarray
    kind: str = "custom"
    p: float = 1.0

    def __post_init__(self):
        u = np.atleast_2d(np.array(self.u, dtype=float))
        v = np.atleast_2d(np.array(self.v, dtype=float))
        if u.shape != v.shape or u.shape[0] == 0:
            raise InvalidInput("family needs matching non-empty u and v stacks")
        if self.kind not in ("lipschitz_p", "custom"):
            raise InvalidInput(f"unknown family kind {self.kind!r}")
        if np.any(u > v + 1e-12 * max(1.0, np.abs(v).max())):
            raise ConstraintViolation("some pair has u > v somewhere")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return self.u.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.u, self.v))

    def check_cost_constraint(self, space: FiniteMetricSpace, tol: float = 1e-9) -> float:
        """Largest violation of ``u(x) - v(y) <= d(x, y)**p`` over the family."""
        cost = space.dist ** self.p
        worst = -np.inf
        for u, v in zip(self.u, self.v):
            worst = max(worst, float(np.max(u[:, None] - v[None, :] - cost)))
        if worst > tol:
            raise ConstraintViolation(f"pair violates the cost constraint by {worst:.3g}")
        return worst


def lipschitz_family(space: FiniteMetricSpace, p: float = 1.0, n_random: int = 32,
                     rng=None, measures: Sequence = (), mu=None) -> TestFunctionPairFamily:
    """Generate admissible pairs for ``V(p, d)``.

    Pairs: the constant pair, distance functions ``d(., x_k)`` and ``d(., S)``
    for random subsets, c-transforms of random vectors, and the optimal dual
    potentials of ``(nu, mu)`` for each ``nu`` in ``measures``. For ``p == 1``
    every generated ``u`` is 1-Lipschitz and pairs are symmetric ``(u, u)``.
    """
    rng = np.random.default_rng(rng)
    n = space.n
    cost = space.dist ** p
    us, vs = [np.zeros(n)], [np.zeros(n)]

    def add_from_v(v):
        u = np.min(v[None, :] + cost, axis=1)
        if p == 1:
            us.append(u)
            vs.append(u.copy())
        else:
            v = np.max(u[:, None] - cost, axis=0)
            us.append(u)
            vs.append(v)

    if p == 1:
        for k in range(n):
            d = space.dist[:, k]
            us.append(d.copy())
            vs.append(d.copy())
            us.append(-d)
            vs.append(-d)
        for _ in range(n_random // 2):
            mask = rng.random(n) < 0.5
            if mask.all() or not mask.any():
                continue
            d = space.dist[:, mask].min(axis=1)
            us.append(d.copy())
            vs.append(d.copy())
    for _ in range(n_random):
        add_from_v(rng.normal(size=n) * space.diameter ** p)
    if measures:
        if mu is None:
            raise InvalidInput("mu is required to add optimal dual pairs")
        for nu in measures:
            sol = optimal_transport(space, nu, mu, p)
            if p == 1:
                us.append(sol.u.copy())
                vs.append(sol.u.copy())
            else:
                us.append(sol.u)
                vs.append(sol.v)
    fam = TestFunctionPairFamily(np.array(us), np.array(vs), "lipschitz_p", p)
    fam.check_cost_constraint(space)
    return fam


def transport_cost(f, mu, family: TestFunctionPairFamily, return_index: bool = False):
    """``T_V(f mu, mu) = max_k sum mu_i f_i u_k,i - sum mu_i v_k,i``."""
    f, mu = _pair(f, mu)
    if family.u.shape[1] != len(mu):
        raise DimensionMismatch("family functions have the wrong length")
    vals = family.u @ (mu * f) - family.v @ mu
    k = int(np.argmax(vals))
    return (float(vals[k]), k) if return_index else float(vals[k])


def sample_a2(family: TestFunctionPairFamily, n_samples: int = 200, rng=None) -> float:
    """Fraction of random ``(nu1, nu2)`` pairs with ``T_V(nu1, nu2) >= 0``."""
    rng = np.random.default_rng(rng)
    n = family.u.shape[1]
    ok = 0
    for _ in range(n_samples):
        a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        ok += bool(np.max(family.u @ a - family.v @ b) >= -1e-12)
    return ok / n_samples


def kantorovich_duality_gap(space: FiniteMetricSpace, mu, nu, p: float, potentials,
                            tol: float = 1e-9) -> float:
    """``W_p(nu, mu)**p - (nu(u) - mu(v))`` for an admissible pair ``(u, v)``."""
    u, v = (np.asarray(x, dtype=float) for x in potentials)
    nu_w, mu_w = weights_of(nu), weights_of(mu)
    _check_same(space, u, v, nu_w, mu_w)
    excess = float(np.max(u[:, None] - v[None, :] - space.dist ** p))
    if excess > tol:
        raise ConstraintViolation(f"potentials violate the cost constraint by {excess:.3g}")
    gap = optimal_transport(space, nu_w, mu_w, p).cost - (nu_w @ u - mu_w @ v)
    return float(gap)


transport_cost_TV_family = transport_cost
