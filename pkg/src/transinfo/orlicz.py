"""Orlicz functions, gauge and Orlicz norms, Phi-Sobolev checks and the bounds they imply."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import IntegrabilityFailed, InvalidInput, UnverifiedConstants
from .markov import ReversibleChain, dirichlet_form, fisher_information, poincare_constant, spectrum
from .metric_measure import FiniteMetricSpace, density_of, mcshane, transport_distance, weights_of
from .verifier.reports import InequalityReport
from .verifier.search import dirichlet_densities, tilts

MARGIN_TOL = 1e-9
MAX_DOUBLINGS = 200


@dataclass(frozen=True, eq=False)
class OrliczFunction:
    """Convex increasing ``Phi: [0, inf) -> [0, inf]`` with ``Phi(0) = 0``.

    Kinds: ``power`` (``coef * r**q``, ``coef = 1/q`` by default),
    ``entropic`` (``(1+r) log(1+r)``), ``entropic_centered``
    (``(1+r) log(1+r) - r``), ``linear`` (``r``; not superlinear, kept as a
    degenerate fixture) and ``custom`` (callable or tabulated grid).
    """

    kind: str
    params: dict
    fn: Callable | None = field(default=None, repr=False)
    dfn: Callable | None = field(default=None, repr=False)

    @classmethod
    def power(cls, q: float, coef: float | None = None):
        if q <= 1:
            raise InvalidInput("power Orlicz function needs q > 1")
        coef = 1.0 / q if coef is None else float(coef)
        if coef <= 0:
            raise InvalidInput("coef must be positive")
        return cls("power", {"q": float(q), "coef": coef})

    @classmethod
    def entropic(cls):
        return cls("entropic", {})

    @classmethod
    def entropic_centered(cls):
        return cls("entropic_centered", {})

    @classmethod
    def linear(cls):
        return cls("linear", {})

    @classmethod
    def custom(cls, fn: Callable, name: str = "custom", check: bool = True, derivative: Callable | None = None):
        phi = cls("custom", {"name": name}, fn, derivative)
        if check:
            phi.check()
        return phi

    @classmethod
    def from_grid(cls, r, values, check: bool = True):
        """Piecewise-linear ``Phi`` through ``(r_k, values_k)``, extended by the last slope."""
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 3 or r[0] != 0 or v[0] != 0:
            raise InvalidInput("grid must start at (0, 0) and have at least 3 points")
        if np.any(np.diff(r) <= 0):
            raise InvalidInput("grid must be strictly increasing")
        slope = (v[-1] - v[-2]) / (r[-1] - r[-2])

        def fn(x):
            x = np.asarray(x, dtype=float)
            return np.where(x <= r[-1], np.interp(x, r, v), v[-1] + slope * (x - r[-1]))

        phi = cls("custom", {"name": "grid", "r": r.tolist(), "values": v.tolist()}, fn)
        if check:
            phi.check(superlinear=False)
        return phi

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise InvalidInput("Orlicz functions are defined on [0, inf)")
        k = self.kind
        if k == "power":
            return self.params["coef"] * r ** self.params["q"]
        if k == "entropic":
            return (1.0 + r) * np.log1p(r)
        if k == "entropic_centered":
            # (1+r) log(1+r) - r, written to avoid cancellation near 0
            small = r < 1e-4
            rs = np.where(small, r, 0.0)
            series = rs ** 2 / 2 - rs ** 3 / 6 + rs ** 4 / 12
            return np.where(small, series, (1.0 + r) * np.log1p(r) - r)
        if k == "linear":
            return r * 1.0
        out = np.asarray(self.fn(r), dtype=float)
        return out

    def check(self, tol: float = 1e-9, superlinear: bool = True) -> None:
        """Check ``Phi(0) = 0``, monotonicity, convexity and growth on a geometric grid."""
        r = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 400)])
        v = self(r)
        if abs(float(v[0])) > tol:
            raise InvalidInput("Phi(0) must be 0")
        fin = np.isfinite(v)
        vf, rf = v[fin], r[fin]
        if np.any(np.diff(vf) < -tol * (1 + np.abs(vf[1:]))):
            raise InvalidInput("Phi must be non-decreasing")
        slopes = np.diff(vf) / np.diff(rf)
        if np.any(np.diff(slopes) < -tol * (1 + np.abs(slopes[1:]))):
            raise InvalidInput("Phi must be convex")
        if superlinear and fin[-1] and v[-1] / r[-1] < 10.0 * max(v[len(v) // 2] / r[len(v) // 2], 1e-300):
            raise InvalidInput("Phi(r)/r must grow without bound")

    # conjugate

    def conjugate(self) -> "OrliczFunction":
        """``Psi(r) = sup_{lam >= 0} (lam r - Phi(lam))``; closed form where available."""
        k = self.kind
        if k == "power":
            q, c = self.params["q"], self.params["coef"]
            qq = q / (q - 1.0)
            cq = c * q
            return OrliczFunction.custom(lambda r: np.asarray(r, dtype=float) ** qq / qq / cq ** (qq - 1.0),
                                         name=f"conj(power {q:g})", check=False,
                                         derivative=lambda r: np.asarray(r, dtype=float) ** (qq - 1.0)
                                         / cq ** (qq - 1.0))
        if k == "entropic":
            def psi(r):
                r = np.asarray(r, dtype=float)
                return np.where(r >= 1.0, np.exp(np.minimum(r, 700.0) - 1.0) - r, 0.0)

            def dpsi(r):
                r = np.asarray(r, dtype=float)
                return np.where(r >= 1.0, np.expm1(np.minimum(r, 700.0) - 1.0), 0.0)
            return OrliczFunction.custom(psi, name="conj(entropic)", check=False, derivative=dpsi)
        if k == "entropic_centered":
            def psi(r):
                r = np.asarray(r, dtype=float)
                return np.expm1(np.minimum(r, 700.0)) - r
            return OrliczFunction.custom(psi, name="conj(entropic_centered)", check=False,
                                         derivative=lambda r: np.expm1(np.minimum(np.asarray(r, dtype=float), 700.0)))
        if k == "linear":
            return OrliczFunction.custom(lambda r: np.where(np.asarray(r, dtype=float) <= 1.0, 0.0, np.inf),
                                         name="conj(linear)", check=False)
        return OrliczFunction.custom(np.vectorize(lambda r: conjugate_numeric(self, float(r))),
                                     name=f"conj({self.params.get('name')})", check=False)

    def derivative(self, r):
        """Right derivative (closed forms, central differences for custom kinds)."""
        r = np.asarray(r, dtype=float)
        k = self.kind
        if k == "power":
            q, c = self.params["q"], self.params["coef"]
            return c * q * r ** (q - 1.0)
        if k == "entropic":
            return np.log1p(r) + 1.0
        if k == "entropic_centered":
            return np.log1p(r)
        if k == "linear":
            return np.ones_like(r)
        if self.dfn is not None:
            return np.asarray(self.dfn(r), dtype=float)
        h = 1e-6 * np.maximum(1.0, r)
        return (self(r + h) - self(np.maximum(r - h, 0.0))) / (r + h - np.maximum(r - h, 0.0))

    def to_dict(self) -> dict:
        if self.kind == "custom" and self.params.get("name") != "grid":
            raise InvalidInput("callable Orlicz functions are not serializable")
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, doc: dict) -> "OrliczFunction":
        doc = dict(doc)
        kind = doc.pop("kind", None)
        if kind == "power":
            return cls.power(**doc)
        if kind in ("entropic", "entropic_centered", "linear"):
            if doc:
                raise InvalidInput(f"unexpected keys for {kind}: {sorted(doc)}")
            return getattr(cls, kind)()
        if kind == "custom" and doc.get("name") == "grid":
            return cls.from_grid(doc["r"], doc["values"])
        raise InvalidInput(f"unknown Orlicz kind {kind!r}")


def conjugate(phi: OrliczFunction) -> OrliczFunction:
    return phi.conjugate()


def conjugate_numeric(phi: OrliczFunction, r: float) -> float:
    """``sup_{lam >= 0} lam r - Phi(lam)`` by bounded scalar maximisation."""
    if r < 0:
        raise InvalidInput("r must be >= 0")
    hi = 1.0
    for _ in range(MAX_DOUBLINGS):
        if float(phi(hi)) > (r + 1.0) * hi:
            break
        hi *= 2.0
    else:
        return math.inf
    res = optimize.minimize_scalar(lambda lam: float(phi(lam)) - lam * r, bounds=(0.0, hi),
                                   method="bounded", options={"xatol": 1e-12 * hi})
    return max(0.0, float(-res.fun))


# norms

def _modular(phi, g, mu, c):
    with np.errstate(over="ignore", invalid="ignore"):
        vals = phi(np.abs(g) / c)
    pos = mu > 0
    if np.any(~np.isfinite(vals[pos])):
        return math.inf
    return float(mu[pos] @ vals[pos])


def gauge_norm(phi: OrliczFunction, g, mu) -> float:
    """``N_Phi(g) = inf{c > 0 : int Phi(|g|/c) dmu <= 1}`` by bracketing and bisection.

    Returns ``inf`` when no bracket is found within 200 doublings.
    """
    mu = weights_of(mu)
    g = np.asarray(g, dtype=float)
    if g.shape != mu.shape:
        raise InvalidInput("g and mu must have the same length")
    g = np.where(mu > 0, g, 0.0)
    if not np.any(g):
        return 0.0
    # N_Phi is homogeneous: bracket for g / max|g| so subnormal or huge g cannot underflow
    scale = float(np.max(np.abs(g)))
    gs = g / scale
    F = lambda c: _modular(phi, gs, mu, c) - 1.0
    hi = 1.0
    for _ in range(MAX_DOUBLINGS):
        if F(hi) <= 0:
            break
        hi *= 2.0
    else:
        return math.inf
    lo = hi / 2.0
    for _ in range(MAX_DOUBLINGS):
        if F(lo) > 0:
            break
        lo /= 2.0
    else:
        return 0.0
    if F(hi) == 0:
        return hi * scale
    # F may be +inf on part of the bracket (linear conjugates), so bisect in log space
    a, b = math.log(lo), math.log(hi)
    for _ in range(200):
        m = 0.5 * (a + b)
        if F(math.exp(m)) > 0:
            a = m
        else:
            b = m
        if b - a < 1e-15:
            break
    return math.exp(b) * scale


def orlicz_norm(phi: OrliczFunction, g, mu) -> float:
    """``||g||_Phi`` through the Amemiya formula ``inf_{k>0} (1 + int Phi(k|g|) dmu) / k``.

    Satisfies ``N_Phi(g) <= ||g||_Phi <= 2 N_Phi(g)``; a violation of the
    sandwich raises, since it means the minimisation did not converge.
    """
    mu = weights_of(mu)
    g = np.asarray(g, dtype=float)
    g = np.where(mu > 0, g, 0.0)
    if not np.any(g):
        return 0.0
    if phi.kind == "linear":
        return float(mu @ np.abs(g))
    N = gauge_norm(phi, g, mu)
    if math.isinf(N):
        return math.inf

    # both norms are homogeneous: work with g / N so extreme magnitudes cannot overflow
    gn = g / N

    def obj(logk):
        k = math.exp(logk)
        m = _modular(phi, gn, mu, 1.0 / k)
        return (1.0 + m) / k

    # the minimiser k* lies in [1, 2] up to convexity slack; search a wide bracket
    res = optimize.minimize_scalar(obj, bounds=(-3.0, 3.0), method="bounded",
                                   options={"xatol": 1e-13})
    # the Amemiya infimum is at most the value at k = 1, which equals 2
    val = N * min(float(res.fun), obj(0.0))
    if val < N * (1 - 1e-9) or val > 2 * N * (1 + 1e-9):
        raise InvalidInput(f"Amemiya minimisation failed: {val} not in [{N}, {2 * N}]")
    return val


def dual_norm_program(phi: OrliczFunction, g, mu) -> float:
    """``sup{int g u dmu : N_Psi(u) <= 1}`` solved directly (small spaces only)."""
    mu = weights_of(mu)
    g = np.asarray(g, dtype=float)
    psi = phi.conjugate()
    a = np.abs(g)
    pos = mu > 0
    if not np.any(a[pos]):
        return 0.0
    return _linear_over_modular_ball(a[pos], mu[pos], psi, psi.derivative)


def _num_deriv(f, s):
    s = np.asarray(s, dtype=float)
    h = 1e-7 * np.maximum(1.0, s)
    return (f(s + h) - f(np.maximum(s - h, 0.0))) / (s + h - np.maximum(s - h, 0.0))


def _linear_over_modular_ball(a, mu, F, dF):
    """``max sum mu_i a_i s_i`` over ``s >= 0`` with ``sum mu_i F(s_i) <= 1`` (``F`` convex increasing).

    KKT: ``a_i = eta F'(s_i)``; ``s_i(eta)`` by bisection per coordinate, ``eta``
    by bisection on the active constraint.
    """
    # tabulate F' once; each s_i(eta) is an interpolated guess refined by bisection
    grid = np.concatenate([[0.0], np.geomspace(1e-10, 1e3, 6000)])
    dgrid = np.maximum.accumulate(dF(grid))
    while not np.isfinite(dgrid[-1]) or dgrid[-1] < 1e12 * max(float(a.max()), 1.0):
        if not np.isfinite(dgrid[-1]) or grid[-1] > 1e150:
            break
        ext = grid[-1] * np.geomspace(1.001, 1e3, 2000)
        grid = np.concatenate([grid, ext])
        dgrid = np.maximum.accumulate(dF(grid))

    def s_of(eta):
        target = a / eta
        k = np.clip(np.searchsorted(dgrid, target), 1, len(grid) - 1)
        lo, hi = grid[k - 1], grid[k]
        flo, fhi = dgrid[k - 1] - target, dgrid[k] - target
        # Illinois false position on each bracket, vectorized
        side = np.zeros_like(lo)
        for _ in range(60):
            den = fhi - flo
            ok = den > 0
            mid = np.where(ok, hi - fhi * (hi - lo) / np.where(ok, den, 1.0), 0.5 * (lo + hi))
            mid = np.clip(mid, lo, hi)
            fm = dF(mid) - target
            below = fm < 0
            fhi = np.where(below & (side < 0), 0.5 * fhi, fhi)
            flo = np.where(~below & (side > 0), 0.5 * flo, flo)
            lo, flo = np.where(below, mid, lo), np.where(below, fm, flo)
            hi, fhi = np.where(below, hi, mid), np.where(below, fhi, fm)
            side = np.where(below, -1.0, 1.0)
            if np.all((hi - lo <= 1e-14 * hi) | (fm == 0)):
                break
        return hi

    def used(eta):
        s = s_of(eta)
        return float(mu @ F(s)) - 1.0

    e_hi = 1.0
    while used(e_hi) > 0:
        e_hi *= 4.0
    e_lo = 0.25 * e_hi
    for _ in range(1000):
        if used(e_lo) > 0:
            break
        e_lo *= 0.25
    eta = math.exp(optimize.brentq(lambda x: used(math.exp(x)), math.log(e_lo), math.log(e_hi),
                                   xtol=1e-13))
    s = s_of(eta)
    # the map eta -> s has flat pieces where F' jumps; scale back onto the constraint
    m = float(mu @ F(s))
    if m > 1.0:
        s = s * optimize.brentq(lambda t: float(mu @ F(t * s)) - 1.0, 0.0, 1.0)
    return float(mu @ (a * s))


# Phi-Sobolev inequality

def phi_sobolev_margin(chain: ReversibleChain, phi: OrliczFunction, C1: float, C2: float, g) -> float:
    """``||g^2||_Phi - C1 E(g, g) - C2 mu(g^2)`` with ``g`` scaled to ``mu(g^2) = 1``."""
    mu = chain.weights
    g = np.asarray(g, dtype=float)
    m2 = float(mu @ g ** 2)
    if m2 <= 0:
        return -C2
    g = g / math.sqrt(m2)
    return orlicz_norm(phi, g ** 2, mu) - C1 * dirichlet_form(chain, g) - C2


def orlicz_poincare_margin(chain: ReversibleChain, phi: OrliczFunction, C1: float, C2: float,
                           g, c_P: float) -> float:
    """``||(g - mu g)^2||_Phi - (C1 + C2 c_P) E(g, g)`` with ``g`` scaled to unit variance."""
    mu = chain.weights
    g = np.asarray(g, dtype=float)
    g = g - mu @ g
    v = float(mu @ g ** 2)
    if v <= 0:
        return 0.0
    g = g / math.sqrt(v)
    return orlicz_norm(phi, g ** 2, mu) - (C1 + C2 * c_P) * dirichlet_form(chain, g)


def default_g_samples(chain: ReversibleChain, n_random: int = 50, rng=None) -> list:
    """Random vectors, eigenfunctions and their combinations, indicators and Lipschitz extremes."""
    rng = np.random.default_rng(rng)
    n = chain.n
    out = [np.ones(n)]
    lam, funcs = spectrum(chain)
    for k in range(1, min(n, 6)):
        e = funcs[:, k]
        out.extend([e, 1.0 + e, 1.0 + 0.3 * e, 1.0 - 0.3 * e, np.abs(e)])
    for i in range(min(n, 8)):
        ind = np.zeros(n)
        ind[i] = 1.0
        out.append(ind)
        out.append(chain.space.dist[:, i].copy())
    for _ in range(n_random):
        out.append(rng.normal(size=n))
        out.append(np.abs(rng.normal(size=n)) + rng.uniform(0, 2))
        out.append(mcshane(chain.space, rng.normal(size=n) * chain.space.diameter))
    return out


def verify_phi_sobolev(chain: ReversibleChain, phi: OrliczFunction, C1: float, C2: float,
                       g_sampler=None, n_random: int = 50, rng=None, tol: float = MARGIN_TOL,
                       c_P: float | None = None) -> InequalityReport:
    """Worst margin of ``||g^2||_Phi <= C1 E(g,g) + C2 mu(g^2)`` over sampled ``g``.

    ``extras['orlicz_poincare_margin']`` holds the worst margin of the centred
    form ``||(g - mu g)^2||_Phi <= (C1 + C2 c_P) E(g, g)``.
    """
    if C1 < 0 or C2 < 0:
        raise InvalidInput("constants must be non-negative")
    samples = list(g_sampler(chain) if g_sampler is not None else default_g_samples(chain, n_random, rng))
    if c_P is None:
        c_P = poincare_constant(chain).constant
    worst, arg = -math.inf, None
    worst_c, arg_c = -math.inf, None
    for g in samples:
        m = phi_sobolev_margin(chain, phi, C1, C2, g)
        if m > worst:
            worst, arg = m, np.asarray(g, dtype=float)
        mc = orlicz_poincare_margin(chain, phi, C1, C2, g, c_P)
        if mc > worst_c:
            worst_c, arg_c = mc, np.asarray(g, dtype=float)

    def ev(w):
        return phi_sobolev_margin(chain, phi, C1, C2, np.asarray(w["g"], dtype=float))

    return InequalityReport("phi_sobolev", {"C1": C1, "C2": C2, "phi": phi.kind}, float(worst), {"g": arg},
                            len(samples), tol, ("sampled g",),
                            {"orlicz_poincare_margin": float(worst_c), "orlicz_poincare_witness": arg_c,
                             "c_P": float(c_P)}, ev)


def sweep_two_state(chain: ReversibleChain, phi: OrliczFunction, C2: float, n_angles: int = 4001):
    """Smallest ``C1`` making the Phi-Sobolev inequality hold at fixed ``C2`` on a 2-state chain.

    Every ``g`` with ``mu(g^2) = 1`` is ``(cos t / sqrt(mu_0), sin t / sqrt(mu_1))``;
    the angle is swept on a grid and the best angle refined. Returns ``inf``
    when ``C2 < ||1||_Phi`` (the constant function violates it for any ``C1``).
    """
    if chain.n != 2:
        raise InvalidInput("exhaustive sweep needs a 2-state chain")
    mu = chain.weights
    if orlicz_norm(phi, np.ones(2), mu) > C2 + 1e-12:
        return math.inf

    def g_of(t):
        return np.array([math.cos(t) / math.sqrt(mu[0]), math.sin(t) / math.sqrt(mu[1])])

    def ratio(t):
        g = g_of(t)
        E = dirichlet_form(chain, g)
        num = orlicz_norm(phi, g ** 2, mu) - C2
        if E <= 1e-14:
            return -math.inf if num <= 1e-12 else math.inf
        return num / E

    ts = np.linspace(0.0, math.pi, n_angles)
    vals = np.array([ratio(t) for t in ts])
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, n_angles - 1)]
    res = optimize.minimize_scalar(lambda t: -ratio(t), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    return max(best, float(-res.fun), 0.0)


# bounds implied by the Phi-Sobolev and Poincare inequalities

def primed_constants(C1: float, C2: float, c_P: float) -> tuple:
    """``(C1', C2') = ((C1 + 2 C2 c_P) C1, 4 (C1 + 2 C2 c_P) C2)``."""
    k = C1 + 2.0 * C2 * c_P
    return k * C1, 4.0 * k * C2


def kappa_proof_chain(p: float, C1: float, C2: float, c_P: float, n: int = 4001) -> float:
    """Smallest ``kappa`` with ``min(4, 4 c_P I)^{1/q} (C1' I^2 + C2' I)^{1/p} <= kappa ((1+I)^{2/p} - 1)``.

    ``q = p/(p-1)``. The supremum over ``I`` is taken on a log grid over
    ``[1e-12, 1e12]`` together with the closed-form limits at both ends.
    """
    if p < 1:
        raise InvalidInput("p must be >= 1")
    C1p, C2p = primed_constants(C1, C2, c_P)
    inv_q = 1.0 - 1.0 / p

    def ratio(I):
        num = min(4.0, 4.0 * c_P * I) ** inv_q * (C1p * I * I + C2p * I) ** (1.0 / p)
        den = math.expm1((2.0 / p) * math.log1p(I))
        return num / den

    Is = np.geomspace(1e-12, 1e12, n)
    vals = np.array([ratio(I) for I in Is])
    # limits: I -> 0 gives (4 c_P)^{1/q} C2'^{1/p} p / 2, I -> inf gives 4^{1/q} C1'^{1/p}
    lim0 = (4.0 * c_P) ** inv_q * C2p ** (1.0 / p) * p / 2.0
    lim_inf = 4.0 ** inv_q * C1p ** (1.0 / p)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = Is[max(k - 1, 0)], Is[min(k + 1, n - 1)]
    res = optimize.minimize_scalar(lambda x: -ratio(math.exp(x)), bounds=(math.log(lo), math.log(hi)),
                                   method="bounded")
    return max(best, float(-res.fun), lim0, lim_inf)


def thm51_bounds(part: str, C1: float, C2: float, c_P: float, **inputs) -> float:
    """Evaluate the bounds implied by a Phi-Sobolev (``C1, C2``) and Poincare (``c_P``) inequality.

    ``part`` and its inputs:

    ``"a"``      ``I``: ``sqrt(C1' I^2 + C2' I)``, a bound on ``||f - 1||_Phi``.
    ``"a_dev"``  ``t, r, u_norm = N_Psi(u), l2_prefactor``: deviation bound
                 ``exp(-t (sqrt(4 C1' s^2 + C2'^2) - C2') / (2 C1'))`` with ``s = r / u_norm``.
    ``"b_cost"`` ``I``: ``sqrt(2 (C1 + 4 C2 c_P) I)``.
    ``"b"``      ``t, r, u2_norm = ||u^2||_Psi, l2_prefactor``:
                 ``exp(-t r^2 / (2 (C1 + 4 C2 c_P) u2_norm))``.
    ``"c"``      ``t, r, p, kappa, up_norm = N_Psi(|u|^p), l2_prefactor``:
                 ``exp(-t ((1 + s^2/kappa)^{p/2} - 1))`` with ``s = r / up_norm^{1/p}``.
                 ``kappa="proof"`` uses :func:`kappa_proof_chain`.
    """
    if min(C1, C2, c_P) < 0:
        raise InvalidInput("constants must be non-negative")
    for k, v in inputs.items():
        if isinstance(v, (int, float)) and v < 0:
            raise InvalidInput(f"{k} must be non-negative")
    C1p, C2p = primed_constants(C1, C2, c_P)
    pref = float(inputs.get("l2_prefactor", 1.0))
    if part == "a":
        I = float(inputs["I"])
        return math.sqrt(C1p * I * I + C2p * I)
    if part == "b_cost":
        I = float(inputs["I"])
        return math.sqrt(2.0 * (C1 + 4.0 * C2 * c_P) * I)
    t, r = float(inputs["t"]), float(inputs["r"])
    if part == "a_dev":
        s = r / float(inputs.get("u_norm", 1.0))
        if C1p == 0:
            rate = s * s / C2p if C2p > 0 else math.inf
        else:
            rate = (math.sqrt(4.0 * C1p * s * s + C2p * C2p) - C2p) / (2.0 * C1p)
        return pref * math.exp(-t * rate)
    if part == "b":
        denom = 2.0 * (C1 + 4.0 * C2 * c_P) * float(inputs["u2_norm"])
        return pref * math.exp(-t * r * r / denom) if denom > 0 else 0.0
    if part == "c":
        p = float(inputs["p"])
        kappa = inputs.get("kappa", "proof")
        if kappa == "proof":
            kappa = kappa_proof_chain(p, C1, C2, c_P)
        kappa = float(kappa)
        if kappa <= 0:
            raise InvalidInput("kappa must be positive")
        s = r / float(inputs.get("up_norm", 1.0)) ** (1.0 / p)
        return pref * math.exp(-t * math.expm1(0.5 * p * math.log1p(s * s / kappa)))
    raise InvalidInput(f"unknown part {part!r}")


def cost_b(phi: OrliczFunction, f, mu) -> float:
    """``sup{int (f - 1) u dmu : N_Psi(u^2) <= 1}`` as a convex program in ``|u|``."""
    mu = weights_of(mu)
    a = np.abs(np.asarray(f, dtype=float) - 1.0)
    pos = mu > 0
    if not np.any(a[pos] > 0):
        return 0.0
    psi = phi.conjugate()
    F = lambda s: psi(s * s)
    dF = lambda s: 2.0 * s * psi.derivative(s * s)
    return _linear_over_modular_ball(a[pos], mu[pos], F, dF)


def _thm51_margins(chain, phi, C1, C2, c_P, f):
    mu = chain.weights
    I = fisher_information(chain, f)
    ma = orlicz_norm(phi, np.abs(f - 1.0), mu) - thm51_bounds("a", C1, C2, c_P, I=I)
    mb = cost_b(phi, f, mu) - thm51_bounds("b_cost", C1, C2, c_P, I=I)
    return ma, mb


def check_thm51a(chain: ReversibleChain, phi: OrliczFunction, C1: float, C2: float,
                 density_sampler=None, verification: InequalityReport | None = None,
                 n_densities: int = 100, rng=None, tol: float = MARGIN_TOL,
                 c_P: float | None = None):
    """Worst margins of ``||f - 1||_Phi <= sqrt(C1' I^2 + C2' I)`` and, in ``extras``, of the ``N_Psi(u^2)`` form.

    Refuses with :class:`UnverifiedConstants` unless ``verification`` is a
    passing :func:`verify_phi_sobolev` report for the same ``(C1, C2)`` and ``Phi``.
    """
    if verification is None:
        raise UnverifiedConstants("constants need a passing verify_phi_sobolev report")
    vc = verification.constants
    if vc.get("C1") != C1 or vc.get("C2") != C2 or vc.get("phi") != phi.kind:
        raise UnverifiedConstants("verification report is for different constants", verification)
    if not verification.holds:
        raise UnverifiedConstants("Phi-Sobolev constants failed verification in verify_phi_sobolev",
                                  verification)
    rng = np.random.default_rng(rng)
    mu = chain.weights
    if c_P is None:
        c_P = poincare_constant(chain).constant
    if density_sampler is not None:
        dens = [density_of(f) for f in density_sampler(chain)]
    else:
        dens = [np.ones(chain.n)] + dirichlet_densities(mu, max(1, n_densities // 3), rng)
        lam, funcs = spectrum(chain)
        for k in range(1, min(chain.n, 4)):
            dens.extend(tilts(mu, funcs[:, k] / max(np.max(np.abs(funcs[:, k])), 1e-300), (0.5, 2.0, 5.0)))
    worst_a, arg_a, worst_b, arg_b = -math.inf, None, -math.inf, None
    for f in dens:
        ma, mb = _thm51_margins(chain, phi, C1, C2, c_P, f)
        if ma > worst_a:
            worst_a, arg_a = ma, f
        if mb > worst_b:
            worst_b, arg_b = mb, f

    def ev(w):
        return _thm51_margins(chain, phi, C1, C2, c_P, np.asarray(w["density"], dtype=float))[0]

    return InequalityReport("thm51a", {"C1": C1, "C2": C2, "c_P": float(c_P), "phi": phi.kind},
                            float(worst_a), {"density": arg_a}, len(dens), tol, tuple(verification.caveats),
                            {"b_margin": float(worst_b), "b_witness": arg_b}, ev)


def cor54_check(space: FiniteMetricSpace, mu, f, p: float = 1.0, x0: int | None = None,
                chain: ReversibleChain | None = None, phi: OrliczFunction | None = None,
                C1: float | None = None, C2: float | None = None, c_P: float | None = None) -> tuple:
    """Margins of ``W_p^p <= 2^{p-1} int |f - 1| d(., x0)^p dmu`` and of its Phi-Sobolev consequence.

    The second margin is ``W_p^p - 2^{p-1} N_Psi(d^p) sqrt(C1' I^2 + C2' I)``,
    computed when ``chain``, ``phi``, ``C1`` and ``C2`` are given, else ``None``.
    """
    mu = weights_of(mu)
    f = density_of(f)
    x0 = space.base_index if x0 is None else x0
    dp = space.dist[:, x0] ** p
    wpp = transport_distance(space, f * mu, mu, p) ** p
    m1 = wpp - 2.0 ** (p - 1.0) * float(mu @ (np.abs(f - 1.0) * dp))
    if chain is None or phi is None or C1 is None or C2 is None:
        return m1, None
    psi = phi.conjugate()
    N = gauge_norm(psi, dp, mu)
    if not math.isfinite(N):
        raise IntegrabilityFailed("d(., x0)^p has infinite Psi gauge norm")
    if c_P is None:
        c_P = poincare_constant(chain).constant
    I = fisher_information(chain, f)
    m2 = wpp - 2.0 ** (p - 1.0) * N * thm51_bounds("a", C1, C2, c_P, I=I)
    return m1, m2
