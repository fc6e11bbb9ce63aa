"""Reversible finite Markov chains: Dirichlet form, spectral and Poisson constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, InvalidInput, NotIrreducible, TransinfoError, UnsupportedExact
from .metric_measure import (FiniteMetricSpace, Measure, density_of, lipschitz_norm, mcshane,
                             optimal_transport)

EXACT_LIP_MAX_N = 60


@dataclass(frozen=True, eq=False)
class ReversibleChain:
    """Generator ``Q`` on a finite metric space, reversible w.r.t. ``mu``.

    ``mu`` is computed from the kernel of ``Q^T`` when omitted and cross-checked
    against detailed balance when given. Reducible chains are only accepted
    with ``require_irreducible=False`` and an explicit ``mu``.
    """

    space: FiniteMetricSpace
    Q: np.ndarray
    mu: Measure | None = None
    require_irreducible: bool = True

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        n = self.space.n
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q has shape {Q.shape}, space has {n} points")
        off = Q.copy()
        np.fill_diagonal(off, 0.0)
        if np.any(off < 0):
            raise InvalidInput("off-diagonal rates must be non-negative")
        scale = max(1.0, float(np.abs(off).sum(axis=1).max()) if n else 1.0)
        if np.any(np.abs(Q.sum(axis=1)) > 1e-12 * scale * max(n, 1)):
            raise InvalidInput("rows of Q must sum to zero")
        n_comp, _ = connected_components(off > 0, directed=True, connection="strong")
        irreducible = n_comp == 1
        if self.require_irreducible and not irreducible:
            raise NotIrreducible(f"rate graph has {n_comp} communicating classes")
        if self.mu is None:
            if not irreducible:
                raise NotIrreducible("mu must be supplied for a reducible chain")
            mu = Measure.normalized(_stationary(Q))
        else:
            mu = self.mu if isinstance(self.mu, Measure) else Measure(self.mu)
            if mu.n != n:
                raise DimensionMismatch("mu has the wrong length")
        flux = mu.weights[:, None] * off
        if np.any(np.abs(flux - flux.T) > 1e-10 * max(1.0, float(flux.max()) if n else 1.0)):
            raise InvalidInput("detailed balance fails")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "_irreducible", irreducible)
        object.__setattr__(self, "_cache", {})

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.mu.weights

    @property
    def irreducible(self) -> bool:
        return self._irreducible

    @property
    def is_birth_death(self) -> bool:
        """Tridiagonal generator on an ordered line space."""
        if not self.space.is_line:
            return False
        return not np.any(np.triu(self.Q, 2)) and not np.any(np.tril(self.Q, -2))

    def symmetrized(self) -> np.ndarray:
        """``D^{1/2} Q D^{-1/2}`` with ``D = diag(mu)``; symmetric when reversible."""
        if "S" not in self._cache:
            s = np.sqrt(self.weights)
            with np.errstate(divide="ignore", invalid="ignore"):
                S = s[:, None] * self.Q / np.where(s > 0, s, 1.0)[None, :]
            S = 0.5 * (S + S.T)
            S.setflags(write=False)
            self._cache["S"] = S
        return self._cache["S"]

    def with_space(self, space: FiniteMetricSpace) -> "ReversibleChain":
        """Same generator and stationary law, different metric."""
        return ReversibleChain(space, self.Q, self.mu, self.require_irreducible)


def _stationary(Q):
    n = Q.shape[0]
    if n == 1:
        return np.ones(1)
    tri = not np.any(np.triu(Q, 2)) and not np.any(np.tril(Q, -2))
    if tri and np.all(np.diag(Q, 1) > 0) and np.all(np.diag(Q, -1) > 0):
        # product formula, accurate even for large rate ratios
        logw = np.concatenate([[0.0], np.cumsum(np.log(np.diag(Q, 1)) - np.log(np.diag(Q, -1)))])
        return np.exp(logw - logw.max())
    A = np.vstack([Q.T, np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    mu, *_ = linalg.lstsq(A, rhs)
    return np.clip(mu, 0.0, None)


def _vec(chain, g):
    g = np.asarray(g, dtype=float)
    if g.shape != (chain.n,):
        raise DimensionMismatch(f"expected a vector of length {chain.n}, got shape {g.shape}")
    return g


def dirichlet_form(chain: ReversibleChain, g, h=None) -> float:
    """``E(g, h) = 1/2 sum_{i != j} mu_i Q_ij (g_j - g_i)(h_j - h_i)``."""
    g = _vec(chain, g)
    h = g if h is None else _vec(chain, h)
    dg = g[None, :] - g[:, None]
    dh = h[None, :] - h[:, None]
    off = chain.Q - np.diag(np.diag(chain.Q))
    return float(0.5 * np.sum(chain.weights[:, None] * off * dg * dh))


def carre_du_champ(chain: ReversibleChain, g, h=None) -> np.ndarray:
    """``Gamma(g, h)_i = 1/2 sum_j Q_ij (g_j - g_i)(h_j - h_i)``."""
    g = _vec(chain, g)
    h = g if h is None else _vec(chain, h)
    off = chain.Q - np.diag(np.diag(chain.Q))
    return 0.5 * np.sum(off * (g[None, :] - g[:, None]) * (h[None, :] - h[:, None]), axis=1)


def fisher_information(chain: ReversibleChain, f) -> float:
    """``I(f mu | mu) = E(sqrt f, sqrt f)``; finite for every density on a finite space."""
    f = _vec(chain, density_of(f))
    if np.any(f < 0):
        raise InvalidInput("density must be non-negative")
    return max(dirichlet_form(chain, np.sqrt(f)), 0.0)


@dataclass(frozen=True)
class PoincareResult:
    constant: float
    gap: float
    eigenfunction: np.ndarray


def _sign_fix(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12 * max(np.abs(v).max(), 1e-300))
    return -v if nz.size and v[nz[0]] < 0 else v


def spectrum(chain: ReversibleChain):
    """Eigenvalues of ``-Q`` (ascending) and ``L^2(mu)``-orthonormal eigenfunctions."""
    if "spec" not in chain._cache:
        S = chain.symmetrized()
        if chain.is_birth_death and chain.n > 2:
            lam, phi = linalg.eigh_tridiagonal(-np.diag(S), -np.diag(S, 1))
        else:
            lam, phi = linalg.eigh(-S)
        s = np.sqrt(chain.weights)
        funcs = phi / np.where(s > 0, s, 1.0)[:, None]
        funcs = np.column_stack([_sign_fix(funcs[:, k]) for k in range(funcs.shape[1])])
        chain._cache["spec"] = (lam, funcs)
    return chain._cache["spec"]


def poincare_constant(chain: ReversibleChain) -> PoincareResult:
    """``c_P = 1 / lambda_1`` together with the gap eigenfunction (``mu(g^2) = 1``)."""
    if not chain.irreducible:
        raise NotIrreducible("the Poincare constant is infinite on a reducible chain")
    if chain.n < 2:
        raise InvalidInput("a one-point chain has no spectral gap")
    lam, funcs = spectrum(chain)
    gap = float(lam[1])
    if gap <= 0:
        raise TransinfoError("eigensolver returned a non-positive gap")
    g = funcs[:, 1].copy()
    g -= chain.weights @ g
    g /= np.sqrt(chain.weights @ g ** 2)
    return PoincareResult(1.0 / gap, gap, _sign_fix(g))


@dataclass(frozen=True)
class PoissonSolution:
    G: np.ndarray
    lip_norm: float
    source: np.ndarray
    residual: float


def _fundamental(chain):
    if "lu" not in chain._cache:
        if not chain.irreducible:
            raise NotIrreducible("the Poisson equation needs an irreducible chain")
        M = -chain.Q + np.outer(np.ones(chain.n), chain.weights)
        chain._cache["M"] = M
        chain._cache["lu"] = linalg.lu_factor(M)
    return chain._cache["lu"]


def poisson_solve(chain: ReversibleChain, g) -> PoissonSolution:
    """Solve ``-Q G = g - mu(g)`` with ``mu(G) = 0``.

    The system ``(-Q + 1 mu^T) G = g - mu(g)`` is non-singular for an
    irreducible chain and its solution is automatically centred.
    """
    g = _vec(chain, g)
    lu = _fundamental(chain)
    gt = g - chain.weights @ g
    G = linalg.lu_solve(lu, gt)
    # one step of iterative refinement
    G += linalg.lu_solve(lu, gt - chain._cache["M"] @ G)
    G -= chain.weights @ G
    res = float(np.max(np.abs(-chain.Q @ G - gt))) if chain.n else 0.0
    scale = max(1.0, float(np.abs(gt).max()))
    if res > 1e-9 * scale:
        raise TransinfoError(f"Poisson residual {res:.3g} exceeds tolerance")
    return PoissonSolution(G, lipschitz_norm(chain.space, G), g, res)


def asymptotic_variance(chain: ReversibleChain, g) -> float:
    """``V(g) = 2 <(-L)^{-1} g~, g~>_mu``."""
    sol = poisson_solve(chain, g)
    gt = sol.source - chain.weights @ sol.source
    return max(2.0 * float(chain.weights @ (sol.G * gt)), 0.0)


def sigma_gamma_bound(chain: ReversibleChain) -> float:
    """``sigma = max_i sqrt(1/2 sum_j Q_ij d_ij^2)``, so that ``sqrt Gamma(g,g) <= sigma ||g||_Lip``."""
    off = chain.Q - np.diag(np.diag(chain.Q))
    return float(np.sqrt(np.max(0.5 * np.sum(off * chain.space.dist ** 2, axis=1))))


@dataclass(frozen=True)
class LipschitzPoissonBracket:
    lower: float
    upper: float
    method: str
    witness: np.ndarray

    @property
    def exact(self) -> bool:
        return self.upper - self.lower <= 1e-8 * max(1.0, self.upper)


def _bd_flux_increments(chain, g):
    # G_{k+1} - G_k = sum_{i>k} mu_i g~_i / (mu_k Q_{k,k+1})
    mu = chain.weights
    gt = g - mu @ g
    tail = np.cumsum((mu * gt)[::-1])[::-1][1:]
    return tail / (mu[:-1] * np.diag(chain.Q, 1))


def lipschitz_poisson_constant(chain: ReversibleChain, exact_required: bool = False,
                               n_search: int = 64, rng=None) -> LipschitzPoissonBracket:
    """Bracket ``c_{Lip,P} = sup{||G||_Lip : ||g||_Lip <= 1}`` with ``-Q G = g - mu(g)``.

    * birth-death chains on a line: exact. The increments of ``G`` follow
      from the flux identity and are maximised by ``g = x``.
    * other chains with ``n <= EXACT_LIP_MAX_N``: exact. With
      ``K = (-Q + 1 mu^T)^{-1}`` one has ``G_i - G_j = (K_i - K_j) g``, whose sup
      over the Lipschitz ball is the Kantorovich-Rubinstein norm of
      ``K_i - K_j``; each is one transport LP.
    * larger chains: a relaxation upper bound and a McShane-search lower bound.
    """
    if not chain.irreducible:
        raise NotIrreducible("c_Lip,P is infinite on a reducible chain")
    n = chain.n
    if n < 2:
        return LipschitzPoissonBracket(0.0, 0.0, "trivial", np.zeros(n))
    if chain.is_birth_death:
        x = chain.space.coords
        ratio = np.abs(_bd_flux_increments(chain, x)) / np.diff(x)
        val = float(ratio.max())
        return LipschitzPoissonBracket(val, val, "birth_death", x.copy())
    _fundamental(chain)
    K = linalg.inv(chain._cache["M"])
    d = chain.space.dist
    if n <= EXACT_LIP_MAX_N:
        best, arg = 0.0, (0, 1)
        for i in range(n):
            for j in range(i + 1, n):
                w = K[i] - K[j]
                m = 0.5 * np.abs(w).sum()
                if m <= 1e-300:
                    continue
                val = m * _kr_norm(chain.space, np.clip(w, 0, None) / m, np.clip(-w, 0, None) / m)
                if val / d[i, j] > best:
                    best, arg = val / d[i, j], (i, j)
        i, j = arg
        w = K[i] - K[j]
        m = 0.5 * np.abs(w).sum()
        sol = optimal_transport(chain.space, np.clip(w, 0, None) / m, np.clip(-w, 0, None) / m, 1.0)
        g = mcshane(chain.space, sol.u)
        lower = poisson_solve(chain, g).lip_norm
        return LipschitzPoissonBracket(min(lower, best), max(lower, best), "kantorovich_lp", g)
    if exact_required:
        raise UnsupportedExact(f"exact c_Lip,P needs a birth-death chain or n <= {EXACT_LIP_MAX_N}")
    upper = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w = np.abs(K[i] - K[j])
            bound = min(w @ d[:, i], w @ d[:, j], 0.5 * w.sum() * chain.space.diameter)
            upper = max(upper, bound / d[i, j])
    rng = np.random.default_rng(rng)
    lower, witness = 0.0, np.zeros(n)
    candidates = [chain.space.dist[:, k] for k in range(n)]
    candidates += [poincare_constant(chain).eigenfunction]
    for _ in range(n_search):
        candidates.append(rng.normal(size=n) * chain.space.diameter)
    for c in candidates:
        g = mcshane(chain.space, c)
        lip = lipschitz_norm(chain.space, g)
        if lip <= 0:
            continue
        val = poisson_solve(chain, g / lip).lip_norm
        if val > lower:
            lower, witness = val, g / lip
    return LipschitzPoissonBracket(lower, max(upper, lower), "relaxation", witness)


def _kr_norm(space, a, b):
    if space.is_line:
        diff = np.cumsum(a - b)[:-1]
        return float(np.abs(diff) @ np.diff(space.coords))
    return optimal_transport(space, a, b, 1.0).cost
