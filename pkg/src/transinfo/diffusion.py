"""One-dimensional diffusions ``L f = a f'' + b f'`` and their birth-death discretization.

With ``phi(x) = int_c^x b/a`` the scale and speed densities are
``s' = exp(-phi)`` and ``m' = exp(phi) / a``; ``L = (1/m') d/dx ((1/s') d/dx)``.
All grid sweeps work with differences of ``phi`` so nothing overflows in the
tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import D1Divergent, InvalidInput
from .markov import ReversibleChain
from .metric_measure import FiniteMetricSpace, Measure

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True, eq=False)
class Diffusion1D:
    """Coefficients on ``(lo, hi)`` (infinite ends allowed) with reference point ``c``."""

    lo: float
    hi: float
    a: Callable
    b: Callable
    c: float
    name: str = "custom"
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lo < self.c < self.hi:
            raise InvalidInput("reference point must lie inside the interval")
        probe = self.probe_grid(257)
        av = np.asarray(self.a(probe), dtype=float) * np.ones_like(probe)
        if np.any(~np.isfinite(av)) or np.any(av <= 0):
            raise InvalidInput("a(x) must be positive on the interval")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def probe_grid(self, n: int) -> np.ndarray:
        lo = self.lo if math.isfinite(self.lo) else self.c - 50.0 * max(1.0, abs(self.c))
        hi = self.hi if math.isfinite(self.hi) else self.c + 50.0 * max(1.0, abs(self.c))
        return np.linspace(lo, hi, n + 2)[1:-1]

    def av(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.a(x), dtype=float) * np.ones_like(x)

    def bv(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.b(x), dtype=float) * np.ones_like(x)

    def drift_ratio(self, x):
        return self.bv(x) / self.av(x)

    def phi(self, x: float) -> float:
        """``int_c^x b(t)/a(t) dt`` by adaptive quadrature."""
        val, _ = integrate.quad(lambda t: float(self.drift_ratio(t)), self.c, x,
                                epsabs=1e-12, epsrel=1e-12, limit=200)
        return val

    def phi_grid(self, x) -> np.ndarray:
        """``phi`` at arbitrary points via 8-point Gauss-Legendre on sorted gaps."""
        return antiderivative(self.drift_ratio, x, self.c)


def antiderivative(fn, x, c: float) -> np.ndarray:
    """``int_c^x fn`` at every point of ``x``: Gauss-Legendre on the gaps, adaptive quad to the anchor."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    flat = x.ravel()
    order = np.argsort(flat, kind="stable")
    xs = flat[order]
    k = int(np.argmin(np.abs(xs - c)))
    inc = _gl_increments(fn, xs) if len(xs) > 1 else np.zeros(0)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    anchor, _ = integrate.quad(lambda t: float(fn(np.array([t]))[0]), c, xs[k],
                               epsabs=1e-13, epsrel=1e-12, limit=200)
    out = np.empty_like(flat)
    out[order] = cum - cum[k] + anchor
    return out.reshape(shape)


def _gl_increments(fn, x):
    lo, hi = x[:-1], x[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (fn(nodes.ravel()).reshape(nodes.shape) @ _GL_W)


@dataclass(frozen=True, eq=False)
class RhoMetric:
    """Strictly increasing ``rho`` with derivative ``drho``; metric ``|rho(x) - rho(y)|``."""

    rho: Callable
    drho: Callable
    name: str = "rho"

    @classmethod
    def identity(cls):
        return cls(lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float)),
                   "identity")

    def check(self, x) -> None:
        d = np.asarray(self.drho(x), dtype=float)
        if np.any(d <= 0) or np.any(np.diff(np.asarray(self.rho(x), dtype=float)) <= 0):
            raise InvalidInput(f"{self.name} is not strictly increasing on the grid")


def rho_a(model: Diffusion1D) -> RhoMetric:
    """``rho_a(x) = int_c^x dt / sqrt(a(t))``, the intrinsic metric of ``L``."""
    inv_sqrt = lambda t: 1.0 / np.sqrt(model.av(t))

    def rho(x):
        return antiderivative(inv_sqrt, np.atleast_1d(np.asarray(x, dtype=float)), model.c)

    return RhoMetric(rho, inv_sqrt, "rho_a")


def scale_speed(model: Diffusion1D, x):
    """Return ``(s'(x), m'(x))`` with ``phi`` by adaptive quadrature."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= model.lo) or np.any(x >= model.hi):
        raise InvalidInput("x must lie in the open interval")
    ph = np.array([model.phi(xi) for xi in x])
    return np.exp(-ph), np.exp(ph) / model.av(x)


# grids

def cell_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Centres of ``n`` equal cells of ``[lo, hi]``."""
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h


def _interfaces(x):
    mid = 0.5 * (x[1:] + x[:-1])
    left = x[0] - 0.5 * (x[1] - x[0])
    right = x[-1] + 0.5 * (x[-1] - x[-2])
    return np.concatenate([[left], mid, [right]])


def _check_grid(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
        raise InvalidInput("grid must be strictly increasing with at least two points")
    if x[0] <= model.lo or x[-1] >= model.hi:
        raise InvalidInput("grid must lie inside the open interval")
    return x


def _log_speed(model, x):
    return model.phi_grid(x) - np.log(model.av(x))


# (D1) and (D2) heuristics

def _window_verdict(window_integral: Callable, point: float, end: float, scale: float):
    """Geometric window test for ``int^end``; returns (verdict, growth exponent)."""
    if math.isinf(end):
        sgn = 1.0 if end > 0 else -1.0
        edges = [point + sgn * scale * 2.0 ** k for k in range(4)]
    else:
        d = end - point
        edges = [end - d * 2.0 ** (-k) for k in range(1, 5)]
    vals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        a, b = (lo, hi) if lo < hi else (hi, lo)
        try:
            v = window_integral(a, b)
        except (OverflowError, FloatingPointError):
            v = math.inf
        vals.append(abs(v))
    if not all(math.isfinite(v) for v in vals):
        return "divergent", math.inf
    if vals[0] == 0 and vals[1] == 0:
        return "convergent", -math.inf
    ratios = [vals[i + 1] / vals[i] if vals[i] > 0 else math.inf for i in range(len(vals) - 1)]
    growth = math.log2(max(ratios[-1], 1e-300))
    if min(ratios) >= 0.95:
        return "divergent", growth
    if max(ratios) <= 0.8:
        return "convergent", growth
    return "inconclusive", growth


def _speed_integral(model, lo, hi):
    ph0 = model.phi(0.5 * (lo + hi))
    xs = np.linspace(lo, hi, 65)
    ph = model.phi_grid(xs) - ph0
    val = integrate.simpson(np.exp(ph) / model.av(xs), x=xs)
    return val * math.exp(ph0) if ph0 < 700 else math.inf


def check_d1(model: Diffusion1D) -> dict:
    """Window test on ``m'`` toward each end; the integral diverges when windows stop shrinking."""
    scale = max(1.0, abs(model.c))
    out = {}
    for side, end in (("left", model.lo), ("right", model.hi)):
        start = model.c
        out[side] = _window_verdict(lambda lo, hi: _speed_integral(model, lo, hi), start, end, scale)
    return out


def stationary_measure(model: Diffusion1D, grid):
    """``(Z, mu, Z_err)``: normalizer of ``m'`` and grid weights ``mu_k ~ m'(x_k) |cell_k|``."""
    x = _check_grid(model, grid)
    d1 = check_d1(model)
    for side, (verdict, growth) in d1.items():
        if verdict == "divergent":
            raise D1Divergent(f"speed measure is not integrable at the {side} end "
                              f"(window growth exponent {growth:.3g})")
    Z, err = integrate.quad(lambda t: math.exp(model.phi(t)) / float(model.av(t)), model.lo,
                            model.hi, epsabs=1e-12, epsrel=1e-10, limit=400)
    widths = np.diff(_interfaces(x))
    logw = _log_speed(model, x) + np.log(widths)
    w = np.exp(logw - logw.max())
    return Z, Measure.normalized(w), err


def check_inaccessible(model: Diffusion1D) -> dict:
    """Feller's test on ``int s'(x) int_c^x m'`` at each end.

    ``inaccessible`` when the integral diverges, ``accessible`` when finite,
    ``inconclusive`` otherwise; each verdict comes with the window growth exponent.
    """
    scale = max(1.0, abs(model.c))
    names = {"convergent": "accessible", "divergent": "inaccessible", "inconclusive": "inconclusive"}
    out = {}
    for side, end in (("left", model.lo), ("right", model.hi)):
        span = 8.0 * scale if math.isinf(end) else (end - model.c) * (1.0 - 2.0 ** -4)
        span = abs(span)
        sgn = 1.0 if end > model.c else -1.0
        xs = model.c + sgn * np.linspace(0.0, span, 40001)
        J = _feller_inner(model, xs)

        def window(lo, hi, xs=xs, J=J):
            m = (xs >= lo - 1e-12 * span) & (xs <= hi + 1e-12 * span)
            return abs(integrate.trapezoid(J[m], xs[m]))

        verdict, growth = _window_verdict(window, model.c, end, scale)
        out[side] = {"verdict": names[verdict], "growth": growth}
    return out


def _feller_inner(model, xs):
    """``s'(x) int_c^x m'`` along a monotone path from ``c`` (recurrence in phi differences)."""
    ph = model.phi_grid(xs)
    inv_a = 1.0 / model.av(xs)
    dx = np.abs(np.diff(xs))
    out = np.zeros(len(xs))
    with np.errstate(over="ignore"):
        decay = np.exp(ph[:-1] - ph[1:])
        for k in range(1, len(xs)):
            out[k] = decay[k - 1] * (out[k - 1] + 0.5 * dx[k - 1] * inv_a[k - 1]) + 0.5 * dx[k - 1] * inv_a[k]
    return out


# truncation of unbounded intervals

def truncation(model: Diffusion1D, q: float = 1e-8, n_fine: int = 40001):
    """Interval ``[x_q, x_{1-q}]`` holding all but ``2q`` of the stationary mass."""
    lo, hi = model.lo, model.hi
    if model.bounded:
        return lo, hi
    R = max(1.0, abs(model.c))
    for _ in range(40):
        a = lo if math.isfinite(lo) else model.c - R
        b = hi if math.isfinite(hi) else model.c + R
        xs = np.linspace(a, b, n_fine)[1:-1] if model.bounded else np.linspace(a, b, n_fine)
        xs = xs[(xs > lo) & (xs < hi)]
        ls = _log_speed(model, xs)
        top = ls.max()
        edge_ok = True
        if not math.isfinite(lo) and ls[0] - top > math.log(q) - 12:
            edge_ok = False
        if not math.isfinite(hi) and ls[-1] - top > math.log(q) - 12:
            edge_ok = False
        if edge_ok:
            break
        R *= 2.0
    dens = np.exp(ls - top)
    cdf = integrate.cumulative_trapezoid(dens, xs, initial=0.0)
    cdf /= cdf[-1]
    left = lo if math.isfinite(lo) else float(np.interp(q, cdf, xs))
    right = hi if math.isfinite(hi) else float(np.interp(1.0 - q, cdf, xs))
    return left, right


def default_grid(model: Diffusion1D, n: int = 800, q: float = 1e-8) -> np.ndarray:
    lo, hi = truncation(model, q)
    return cell_grid(lo, hi, n)


# discretization

def discretize(model: Diffusion1D, grid, rho: RhoMetric | None = None) -> ReversibleChain:
    """Finite-volume birth-death chain with reflecting ends.

    ``Q_{k,k+1} = exp(phi_{k+1/2}) / (h_{k+1/2} |cell_k| m'_k)`` and symmetrically
    down, so ``mu_k Q_{k,k+1} = mu_{k+1} Q_{k+1,k}`` with ``mu_k ~ m'_k |cell_k|``.
    The state space carries the metric of ``rho`` (identity by default).
    """
    x = _check_grid(model, grid)
    n = len(x)
    widths = np.diff(_interfaces(x))
    h = np.diff(x)
    pts = np.concatenate([x, 0.5 * (x[1:] + x[:-1])])
    order = np.argsort(pts, kind="stable")
    ph_sorted = model.phi_grid(pts[order])
    ph = np.empty_like(pts)
    ph[order] = ph_sorted
    ph_x, ph_mid = ph[:n], ph[n:]
    av = model.av(x)
    up = av[:-1] * np.exp(ph_mid - ph_x[:-1]) / (h * widths[:-1])
    down = av[1:] * np.exp(ph_mid - ph_x[1:]) / (h * widths[1:])
    Q = np.zeros((n, n))
    idx = np.arange(n - 1)
    Q[idx, idx + 1] = up
    Q[idx + 1, idx] = down
    Q[np.arange(n), np.arange(n)] = -Q.sum(axis=1)
    logw = ph_x - np.log(av) + np.log(widths)
    mu = Measure.normalized(np.exp(logw - logw.max()))
    rho = rho or RhoMetric.identity()
    coords = np.asarray(rho.rho(x), dtype=float)
    space = FiniteMetricSpace.line(coords)
    return ReversibleChain(space, Q, mu)


# C(rho), Poisson solution, Chen-Wang

def _tail_sweep(model, x, h_vals, rho_mean=None):
    """``T_k = s'(x_k) int_{x_k}^{hi} h m' dt`` on the grid, swept from both ends.

    Uses the recurrence ``T_k = e^{phi_{k+1}-phi_k} T_{k+1} + int_{x_k}^{x_{k+1}} h e^{phi - phi_k}/a``;
    the left half is computed as ``-s' int_lo^x h m'`` to avoid cancellation.
    """
    ph = model.phi_grid(x)
    a = model.av(x)
    dx = np.diff(x)
    integrand = h_vals / a
    # trapezoid pieces in the local exponent
    right_piece = 0.5 * dx * (integrand[:-1] + integrand[1:] * np.exp(ph[1:] - ph[:-1]))
    left_piece = 0.5 * dx * (integrand[1:] + integrand[:-1] * np.exp(ph[:-1] - ph[1:]))
    n = len(x)
    R = np.zeros(n)
    for k in range(n - 2, -1, -1):
        R[k] = math.exp(ph[k + 1] - ph[k]) * R[k + 1] + right_piece[k]
    L = np.zeros(n)
    for k in range(1, n):
        L[k] = math.exp(ph[k - 1] - ph[k]) * L[k - 1] + left_piece[k - 1]
    # both are approximations of the same function; use the side with the shorter sweep
    mid = n // 2
    if rho_mean is not None:
        mid = int(np.searchsorted(x, rho_mean))
    return np.where(np.arange(n) >= mid, R, -L), ph


def c_rho(model: Diffusion1D, rho: RhoMetric | None = None, n_fine: int = 20001,
          q: float = 1e-10, refine: bool = True) -> float:
    """``C(rho) = sup_x (s'(x)/rho'(x)) int_x^hi (rho - mu(rho)) m' dt``.

    Computed on a fine grid of the (truncated) interval by a two-sided sweep,
    then refined by bounded maximisation with adaptive quadrature. Returns
    ``inf`` if the value keeps growing with the truncation.
    """
    rho = rho or RhoMetric.identity()
    val, xstar = _c_rho_grid(model, rho, n_fine, q)
    if not model.bounded:
        val2, _ = _c_rho_grid(model, rho, n_fine, q * 1e-4)
        if val2 > 1.05 * val + 1e-12:
            return math.inf
    if refine and math.isfinite(val):
        val = max(val, _c_rho_refine(model, rho, xstar, val))
    return val


def _mean_rho(model, rho, x, ph):
    a = model.av(x)
    dens = np.exp(ph - ph.max()) / a
    r = np.asarray(rho.rho(x), dtype=float)
    return integrate.simpson(r * dens, x=x) / integrate.simpson(dens, x=x)


def _fine_grid(model, n_fine, q):
    lo, hi = truncation(model, q)
    if model.bounded:
        # interior grid; the ratio extends continuously to the ends
        return np.linspace(lo, hi, n_fine + 2)[1:-1]
    return np.linspace(lo, hi, n_fine)


def _c_rho_grid(model, rho, n_fine, q):
    x = _fine_grid(model, n_fine, q)
    ph = model.phi_grid(x)
    m_rho = _mean_rho(model, rho, x, ph)
    r = np.asarray(rho.rho(x), dtype=float)
    T, _ = _tail_sweep(model, x, r - m_rho, None)
    ratio = T / np.asarray(rho.drho(x), dtype=float)
    k = int(np.argmax(ratio))
    return float(ratio[k]), float(x[k])


def _c_rho_exact(model, rho, x, m_rho, n: int = 8001):
    """Pointwise ``C(rho)`` ratio by Simpson on a dense grid from ``x`` to the nearer tail."""
    lo, hi = truncation(model, 1e-14)
    t = np.linspace(x, hi, n) if x >= model.c else np.linspace(lo, x, n)
    ph = model.phi_grid(t)
    ph_x = ph[0] if x >= model.c else ph[-1]
    vals = (np.asarray(rho.rho(t), dtype=float) - m_rho) * np.exp(ph - ph_x) / model.av(t)
    val = integrate.simpson(vals, x=t)
    if x < model.c:
        val = -val
    return val / float(np.asarray(rho.drho(np.array([x])))[0])


def _mean_rho_exact(model, rho, n: int = 40001):
    lo, hi = truncation(model, 1e-14)
    t = np.linspace(lo, hi, n) if not model.bounded else np.linspace(lo, hi, n)[1:-1]
    ph = model.phi_grid(t)
    dens = np.exp(ph - ph.max()) / model.av(t)
    return integrate.simpson(np.asarray(rho.rho(t), dtype=float) * dens, x=t) / integrate.simpson(dens, x=t)


def _c_rho_refine(model, rho, xstar, val):
    m_rho = _mean_rho_exact(model, rho)
    lo, hi = truncation(model, 1e-10)
    width = 0.02 * (hi - lo)
    a, b = max(lo, xstar - width), min(hi, xstar + width)
    eps = 1e-9 * (hi - lo)
    a, b = max(a, lo + eps), min(b, hi - eps)
    if b <= a:
        return val
    res = optimize.minimize_scalar(lambda x: -_c_rho_exact(model, rho, x, m_rho), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-9 * (hi - lo)})
    return float(-res.fun)


@dataclass(frozen=True)
class PoissonClosedForm:
    grid: np.ndarray
    f: np.ndarray
    df: np.ndarray
    lip_norm: float
    residual: float


def poisson_closed_form(model: Diffusion1D, g: Callable, rho: RhoMetric | None = None, grid=None,
                        n: int = 20001, center_tol: float = 1e-8) -> PoissonClosedForm:
    """Solve ``-(a f'' + b f') = g`` with ``f'(x) = s'(x) int_x^hi g m'`` and ``mu(f) = 0``.

    ``residual`` is the sup over the bulk of the grid (mass between the
    ``1e-3`` quantiles) of the finite-difference residual.
    """
    rho = rho or RhoMetric.identity()
    x = default_grid(model, n, 1e-10) if grid is None else _check_grid(model, grid)
    ph = model.phi_grid(x)
    gv = np.asarray(g(x), dtype=float) * np.ones_like(x)
    dens = np.exp(ph - ph.max()) / model.av(x)
    mean_g = integrate.simpson(gv * dens, x=x) / integrate.simpson(dens, x=x)
    if abs(mean_g) > center_tol * max(1.0, float(np.max(np.abs(gv)))):
        raise InvalidInput(f"g is not centred: mu(g) = {mean_g:.3g}")
    df, _ = _tail_sweep(model, x, gv - mean_g)
    f = integrate.cumulative_trapezoid(df, x, initial=0.0)
    f -= integrate.simpson(f * dens, x=x) / integrate.simpson(dens, x=x)
    d2f = np.gradient(df, x)
    res = np.abs(-(model.av(x) * d2f + model.bv(x) * df) - gv)
    cdf = integrate.cumulative_trapezoid(dens, x, initial=0.0)
    cdf /= cdf[-1]
    bulk = (cdf > 1e-3) & (cdf < 1 - 1e-3)
    bulk[[0, -1]] = False
    lip = float(np.max(np.abs(df) / np.asarray(rho.drho(x), dtype=float)))
    return PoissonClosedForm(x, f, df, lip, float(res[bulk].max()) if bulk.any() else 0.0)


def sigma_rho(model: Diffusion1D, rho: RhoMetric, n: int = 4001, cap: float = 1e12) -> float:
    """``sup_x sqrt(a(x)) rho'(x)``, including finite endpoints; ``inf`` above ``cap``."""
    lo, hi = truncation(model, 1e-10)
    x = np.linspace(lo, hi, n)
    if not model.bounded:
        x = x[1:-1]
    vals = np.sqrt(model.av(x)) * np.asarray(rho.drho(x), dtype=float)
    k = int(np.argmax(vals))
    best = float(vals[k])
    a, b = x[max(k - 1, 0)], x[min(k + 1, len(x) - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda t: -float(np.sqrt(model.av(t)) * rho.drho(np.array([t]))[0]),
                                       bounds=(a, b), method="bounded")
        best = max(best, float(-res.fun))
    return math.inf if best > cap else best


def warp_family(model: Diffusion1D) -> list:
    """Default metrics: ``rho_a``, sinh/affine warps of it, and a sine warp on bounded intervals."""
    base = rho_a(model)
    fam = [base]
    for k in (0.25, 0.5, 1.0):
        fam.append(RhoMetric(lambda x, k=k: np.sinh(k * base.rho(x)) / k,
                             lambda x, k=k: np.cosh(k * base.rho(x)) * base.drho(x),
                             f"sinh({k})"))
    if model.bounded:
        ends = base.rho(np.array([model.lo, model.hi]))
        L = float(ends[1] - ends[0])
        lo = float(ends[0])
        fam.append(RhoMetric(lambda x: -np.cos(math.pi * (base.rho(x) - lo) / L),
                             lambda x: math.pi / L * np.sin(math.pi * (base.rho(x) - lo) / L) * base.drho(x),
                             "sine"))
    return fam


def chen_wang_gap_bound(model: Diffusion1D, family=None, n_fine: int = 20001):
    """``max_rho 1 / C(rho)`` over a family, a lower bound on the spectral gap."""
    family = warp_family(model) if family is None else family
    best, arg, values = 0.0, None, {}
    for rho in family:
        C = c_rho(model, rho, n_fine)
        values[rho.name] = C
        if C > 0 and math.isfinite(C) and 1.0 / C > best:
            best, arg = 1.0 / C, rho
    return best, arg, values


# fixtures

@dataclass(frozen=True, eq=False)
class Example:
    name: str
    model: Diffusion1D | None
    chain: ReversibleChain
    grid: np.ndarray
    params: dict


def ou_model(sigma: float = 1.0) -> Diffusion1D:
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    s2 = sigma * sigma
    return Diffusion1D(-math.inf, math.inf, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       lambda x: -np.asarray(x, dtype=float) / s2, 0.0, "ou",
                       {"name": "ou", "sigma": sigma})


def reflected_bm_model(D: float = 1.0) -> Diffusion1D:
    if D <= 0:
        raise InvalidInput("D must be positive")
    return Diffusion1D(0.0, D, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.5 * D,
                       "reflected_bm", {"name": "reflected_bm", "D": D})


def quartic_potential(beta: float):
    """Symmetrised ``V = x^4 + 4 |x|^3 sin^2 x + |x|^beta`` and ``V'``."""
    def V(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        return x ** 4 + 4 * ax ** 3 * np.sin(x) ** 2 + ax ** beta

    def dV(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        s = np.sign(x)
        return (4 * x ** 3 + 12 * s * ax ** 2 * np.sin(x) ** 2 + 8 * ax ** 3 * np.sin(x) * np.cos(x)
                + beta * s * ax ** (beta - 1))

    return V, dV


def quartic_model(beta: float = 2.5) -> Diffusion1D:
    if not 2.0 < beta < 3.0:
        raise InvalidInput("beta must lie in (2, 3)")
    _, dV = quartic_potential(beta)
    return Diffusion1D(-math.inf, math.inf, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       lambda x: -dV(x), 0.0, "quartic", {"name": "quartic", "beta": beta})


def convex_model(s: float = 1.0) -> Diffusion1D:
    """``V = x^2/(2 s^2) + x^4/4``: ``V'' >= 1/s^2``, so ``HI(s^2)`` holds by Bakry-Emery."""
    if s <= 0:
        raise InvalidInput("s must be positive")
    return Diffusion1D(-math.inf, math.inf, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       lambda x: -(np.asarray(x, dtype=float) / (s * s) + np.asarray(x, dtype=float) ** 3),
                       0.0, "convex", {"name": "convex", "s": s})


def model_from_spec(spec: dict) -> Diffusion1D:
    spec = dict(spec)
    name = spec.pop("name", None)
    builders = {"ou": ou_model, "reflected_bm": reflected_bm_model, "quartic": quartic_model,
                "convex": convex_model}
    if name not in builders:
        raise InvalidInput(f"unknown model {name!r}")
    return builders[name](**spec)


def two_interval_chain(n_per: int = 100) -> tuple:
    """Reflected BM on ``[-2,-1] U [1,2]`` with weight 1/2 on each piece and no crossing."""
    h = 1.0 / n_per
    left = cell_grid(-2.0, -1.0, n_per)
    right = cell_grid(1.0, 2.0, n_per)
    x = np.concatenate([left, right])
    n = len(x)
    Q = np.zeros((n, n))
    for off in (0, n_per):
        i = np.arange(off, off + n_per - 1)
        Q[i, i + 1] = 1.0 / h ** 2
        Q[i + 1, i] = 1.0 / h ** 2
    Q[np.arange(n), np.arange(n)] = -Q.sum(axis=1)
    mu = Measure(np.full(n, 1.0 / n))
    chain = ReversibleChain(FiniteMetricSpace.line(x), Q, mu, require_irreducible=False)
    return chain, x


def make_example(name: str, n: int | None = None, **params) -> Example:
    """Named fixtures: ``ou(sigma)``, ``reflected_bm(D)``, ``quartic(beta)``, ``convex(s)``, ``two_interval``."""
    if name == "ou":
        sigma = float(params.get("sigma", 1.0))
        model = ou_model(sigma)
        grid = cell_grid(-6.0 * sigma, 6.0 * sigma, n or 800)
    elif name == "reflected_bm":
        D = float(params.get("D", 1.0))
        model = reflected_bm_model(D)
        grid = cell_grid(0.0, D, n or 200)
    elif name == "quartic":
        model = quartic_model(float(params.get("beta", 2.5)))
        grid = default_grid(model, n or 800)
    elif name == "convex":
        model = convex_model(float(params.get("s", 1.0)))
        grid = default_grid(model, n or 800)
    elif name == "two_interval":
        chain, grid = two_interval_chain(n or 100)
        return Example(name, None, chain, grid, dict(params))
    else:
        raise InvalidInput(f"unknown example {name!r}")
    return Example(name, model, discretize(model, grid), grid, dict(model.spec))


EXAMPLES = ("ou", "reflected_bm", "quartic", "convex", "two_interval")
