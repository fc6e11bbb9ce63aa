"""Rate functions and their transforms.

A rate function is a convex non-decreasing ``alpha: [0, inf) -> [0, inf]``
with ``alpha(0) = 0``. Values beyond the domain ``[0, r_max]`` are ``+inf``,
which is the absorbing sentinel used throughout (``inf`` wins every max/sum,
loses every min).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import GammaDivergent, InvalidInput, TransinfoError

GRID_POINTS = 512
GRID_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class RateFunction:
    """Tagged rate function.

    Use the constructors :meth:`power`, :meth:`gaussian`, :meth:`zero`,
    :meth:`from_grid`, :meth:`custom` and :func:`alpha_p` rather than the raw
    initializer.
    """

    kind: str
    params: dict
    r_max: float = math.inf
    fn: Callable | None = field(default=None, repr=False)

    # constructors

    @classmethod
    def power(cls, coef: float, exponent: float, r_max: float = math.inf):
        """``alpha(r) = coef * r**exponent``."""
        if coef < 0 or exponent < 1:
            raise InvalidInput("power rate needs coef >= 0 and exponent >= 1")
        return cls("power", {"coef": float(coef), "exponent": float(exponent)}, float(r_max))

    @classmethod
    def gaussian(cls, C: float):
        """``alpha(r) = r**2 / (4 C**2)``, the Gaussian rate of a ``W_pI(C)`` inequality."""
        if C <= 0:
            raise InvalidInput("C must be positive")
        return cls("power", {"coef": 1.0 / (4.0 * C * C), "exponent": 2.0, "C": float(C)})

    @classmethod
    def zero(cls, r_max: float = math.inf):
        """``alpha = 0`` on ``[0, r_max]``, ``+inf`` beyond."""
        return cls("power", {"coef": 0.0, "exponent": 1.0}, float(r_max))

    @classmethod
    def from_grid(cls, r, values, check: bool = True):
        """Piecewise-linear interpolation of tabulated values, ``+inf`` past the last knot."""
        r = np.asarray(r, dtype=float)
        a = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != a.shape or len(r) < 2:
            raise InvalidInput("grid needs matching abscissae and values, at least two points")
        if r[0] != 0 or a[0] != 0:
            raise InvalidInput("grid rate must start at (0, 0)")
        if np.any(np.diff(r) <= 0):
            raise InvalidInput("grid abscissae must increase")
        r.setflags(write=False)
        a.setflags(write=False)
        out = cls("grid", {"r": r, "values": a}, float(r[-1]))
        if check:
            out.check()
        return out

    @classmethod
    def custom(cls, fn: Callable, r_max: float = math.inf, check: bool = True, name: str = "custom",
               **params):
        """Wrap a scalar callable. Convexity is checked on a geometric grid."""
        out = cls("custom", {"name": name, **params}, float(r_max), fn)
        if check:
            out.check()
        return out

    # evaluation

    def _eval_scalar(self, r: float) -> float:
        if r < 0:
            raise InvalidInput("rate functions live on r >= 0")
        if r > self.r_max:
            return math.inf
        if self.kind == "power":
            c, k = self.params["coef"], self.params["exponent"]
            return c * r ** k
        if self.kind == "grid":
            return float(np.interp(r, self.params["r"], self.params["values"]))
        return float(self.fn(r))

    def __call__(self, r):
        arr = np.asarray(r, dtype=float)
        if arr.ndim == 0:
            return self._eval_scalar(float(arr))
        return np.array([self._eval_scalar(float(x)) for x in arr.ravel()]).reshape(arr.shape)

    def derivative(self, r: float) -> float:
        """Right derivative at ``r`` (``+inf`` at or past ``r_max``)."""
        if r >= self.r_max:
            return math.inf
        if self.kind == "power":
            c, k = self.params["coef"], self.params["exponent"]
            return c * k * r ** (k - 1) if (k > 1 or c == 0) else c
        if self.kind == "grid":
            rk, ak = self.params["r"], self.params["values"]
            i = min(int(np.searchsorted(rk, r, side="right")) - 1, len(rk) - 2)
            return float((ak[i + 1] - ak[i]) / (rk[i + 1] - rk[i]))
        h = 1e-6 * max(1.0, r)
        h = min(h, 0.5 * (self.r_max - r)) if math.isfinite(self.r_max) else h
        return (self._eval_scalar(r + h) - self._eval_scalar(r)) / h

    def grid(self, n: int = GRID_POINTS, r_hi: float | None = None) -> np.ndarray:
        """``0`` followed by a geometric grid on ``[GRID_FLOOR, r_hi]``."""
        hi = self.r_max if r_hi is None else r_hi
        if not math.isfinite(hi):
            hi = 1e3
        return np.concatenate([[0.0], np.geomspace(min(GRID_FLOOR, hi / 2), hi, n - 1)])

    def check(self, tol: float = 1e-9) -> None:
        """Raise unless ``alpha(0) = 0``, non-decreasing and convex on the grid."""
        if self.kind == "grid":
            r, a = self.params["r"], self.params["values"]
        else:
            r = self.grid()
            a = self(r)
            keep = np.isfinite(a)
            r, a = r[keep], a[keep]
        if abs(a[0]) > tol:
            raise InvalidInput("alpha(0) must be 0")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.any(np.diff(a) < -tol * scale):
            raise InvalidInput("rate function must be non-decreasing")
        slopes = np.diff(a) / np.diff(r)
        if np.any(np.diff(slopes) < -tol * max(1.0, float(np.max(np.abs(slopes))))):
            raise InvalidInput("rate function must be convex")

    # transforms

    def conj(self, lam):
        """Semi-Legendre transform ``alpha*(lam) = sup_{r >= 0} (lam r - alpha(r))``."""
        arr = np.asarray(lam, dtype=float)
        if arr.ndim == 0:
            return self._conj_scalar(float(arr))
        return np.array([self._conj_scalar(float(x)) for x in arr.ravel()]).reshape(arr.shape)

    def _conj_scalar(self, lam: float) -> float:
        if lam < 0:
            raise InvalidInput("the semi-Legendre transform is taken for lam >= 0")
        R = self.r_max
        if self.kind == "power":
            c, k = self.params["coef"], self.params["exponent"]
            if k == 1 or c == 0:
                if lam <= c:
                    return 0.0
                return (lam - c) * R
            if lam == 0:
                return 0.0
            # log space: exponents near 1 push r_star past the float range
            log_r = math.log(lam / (c * k)) / (k - 1)
            if log_r <= math.log(R):
                log_val = math.log((k - 1) * c) + k * log_r
                return math.exp(log_val) if log_val < 709.0 else math.inf
            return lam * R - c * R ** k
        if self.kind == "grid":
            vals = lam * self.params["r"] - self.params["values"]
            return float(vals[int(np.argmax(vals))])
        return self._conj_numeric(lam)

    def _conj_numeric(self, lam: float) -> float:
        hi = self.r_max if math.isfinite(self.r_max) else 1.0
        for _ in range(60):
            r = self.grid(GRID_POINTS, hi)
            vals = lam * r - self(r)
            k = int(np.argmax(vals))
            if k < len(r) - 1 or math.isfinite(self.r_max):
                break
            hi *= 4.0
        else:
            return math.inf
        lo_r = r[max(k - 1, 0)]
        hi_r = r[min(k + 1, len(r) - 1)]
        best = vals[k]
        if hi_r > lo_r:
            res = optimize.minimize_scalar(lambda x: self._eval_scalar(x) - lam * x,
                                           bounds=(lo_r, hi_r), method="bounded",
                                           options={"xatol": 1e-12 * max(1.0, hi_r)})
            best = max(best, -float(res.fun))
        return max(float(best), 0.0)

    def inverse(self, t):
        """Generalized inverse ``alpha^{-1}(t) = inf{r >= 0 : alpha(r) > t}`` (``inf`` if empty)."""
        arr = np.asarray(t, dtype=float)
        if arr.ndim == 0:
            return self._inv_scalar(float(arr))
        return np.array([self._inv_scalar(float(x)) for x in arr.ravel()]).reshape(arr.shape)

    def _inv_scalar(self, t: float) -> float:
        if t < 0:
            raise InvalidInput("t must be >= 0")
        R = self.r_max
        if self.kind == "power":
            c, k = self.params["coef"], self.params["exponent"]
            if c == 0:
                return R
            return min((t / c) ** (1.0 / k), R)
        if self.kind == "grid":
            rk, ak = self.params["r"], self.params["values"]
            i = int(np.searchsorted(ak, t, side="right")) - 1
            if i >= len(rk) - 1:
                return float(rk[-1])
            return float(rk[i] + (t - ak[i]) / (ak[i + 1] - ak[i]) * (rk[i + 1] - rk[i]))
        # custom: alpha is continuous on its domain, so the inf equals sup{alpha <= t}
        hi = R if math.isfinite(R) else 1.0
        while self._eval_scalar(hi) <= t:
            if math.isfinite(R):
                return R
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._eval_scalar(mid) > t:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * hi:
                break
        return hi

    def tilde(self) -> "RateFunction":
        """``alpha~(r) = 2 int_0^r sqrt(alpha(s)) ds``."""
        if self.kind == "power" and math.isinf(self.r_max):
            c, k = self.params["coef"], self.params["exponent"]
            if c == 0:
                return RateFunction.zero()
            e = k / 2.0 + 1.0
            return RateFunction.power(2.0 * math.sqrt(c) / e, e)
        base = self

        def fn(r):
            val, _ = integrate.quad(lambda s: math.sqrt(base._eval_scalar(s)), 0.0, r,
                                    epsabs=1e-13, epsrel=1e-11, limit=200)
            return 2.0 * val

        return RateFunction.custom(fn, self.r_max, check=False, name="tilde")

    def to_dict(self) -> dict:
        if self.kind == "grid":
            return {"kind": "grid", "r": self.params["r"].tolist(),
                    "values": self.params["values"].tolist()}
        if self.kind == "power":
            out = {"kind": "power", **self.params}
            if math.isfinite(self.r_max):
                out["r_max"] = self.r_max
            return out
        if self.params.get("name") == "alpha_p":
            return {"kind": "alpha_p", "p": self.params["p"], "kappa": self.params["kappa"]}
        raise TransinfoError("custom callables cannot be serialized")

    @classmethod
    def from_dict(cls, doc: dict) -> "RateFunction":
        kind = doc.get("kind")
        if kind == "power":
            if "C" in doc:
                return cls.gaussian(doc["C"])
            return cls.power(doc["coef"], doc["exponent"], doc.get("r_max", math.inf))
        if kind == "gaussian":
            return cls.gaussian(doc["C"])
        if kind == "zero":
            return cls.zero(doc.get("r_max", math.inf))
        if kind == "grid":
            return cls.from_grid(doc["r"], doc["values"])
        if kind == "alpha_p":
            return alpha_p(doc["p"], doc["kappa"])
        raise InvalidInput(f"unknown rate function kind {kind!r}")


def generalized_inverse(alpha: RateFunction) -> Callable:
    """Return ``t -> inf{r >= 0 : alpha(r) > t}``."""
    return alpha.inverse


def legendre_conjugate(alpha: RateFunction) -> Callable:
    return alpha.conj


def tilde_alpha(alpha: RateFunction) -> RateFunction:
    return alpha.tilde()


def alpha_p(p: float, kappa: float) -> RateFunction:
    """``alpha_p(r) = (1 + r^2/kappa)^{p/2} - 1``."""
    if p < 1 or kappa <= 0:
        raise InvalidInput("alpha_p needs p >= 1 and kappa > 0")
    if p == 2:
        return RateFunction("power", {"coef": 1.0 / kappa, "exponent": 2.0})

    def fn(r):
        # expm1/log1p keeps small r accurate
        return math.expm1(0.5 * p * math.log1p(r * r / kappa))

    return RateFunction.custom(fn, name="alpha_p", p=float(p), kappa=float(kappa), check=False)


# composition beta -> gamma -> alpha = beta o gamma^{-1}

def _local_exponent(beta: Callable, r0: float) -> float:
    r1, r2 = r0 * 1e-9, r0 * 1e-7
    b1, b2 = float(beta(r1)), float(beta(r2))
    if b1 <= 0 or b2 <= 0:
        return math.inf
    return math.log(b2 / b1) / math.log(r2 / r1)


@dataclass(frozen=True, eq=False)
class GammaTransform:
    """``gamma(r) = 1/2 int_0^r ds / sqrt(beta(s))`` and its inverse."""

    beta: Callable
    r_max: float
    delta0: float

    def __call__(self, r: float) -> float:
        if r <= 0:
            return 0.0
        # s = r x^m flattens the s^{-delta/2} singularity at 0
        m = 2.0 / (2.0 - min(self.delta0, 1.999)) if self.delta0 > 0 else 1.0
        beta = self.beta

        def integrand(x):
            if x <= 0:
                return 0.0
            s = r * x ** m
            b = float(beta(s))
            return r * m * x ** (m - 1) / math.sqrt(b) if b > 0 else math.inf

        val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
        return 0.5 * val

    def inverse(self, s: float) -> float:
        """``gamma^{-1}(s)``; ``inf`` when ``s`` exceeds ``gamma(r_max)``."""
        if s <= 0:
            return 0.0
        hi = 1.0
        while self(hi) < s:
            hi *= 16.0
            if hi > self.r_max:
                if self(self.r_max) < s:
                    return math.inf
                hi = self.r_max
                break
        lo = hi / 16.0
        while self(lo) > s:
            lo /= 16.0
            if lo < 1e-300:
                return 0.0
        root = optimize.brentq(lambda y: self(math.exp(y)) - s, math.log(lo), math.log(hi),
                               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
        return math.exp(root)


def gamma_from_beta(beta, r_max: float = math.inf, scale: float = 1.0) -> GammaTransform:
    """Build ``gamma`` and check integrability of ``beta^{-1/2}`` at 0.

    The local power of ``beta`` near 0 is estimated from two tiny abscissae;
    an exponent ``>= 2`` means the integral diverges.
    """
    b = beta if callable(beta) else RateFunction.from_dict(beta)
    delta0 = _local_exponent(b, scale)
    if delta0 >= 2.0 - 1e-6:
        raise GammaDivergent(f"beta behaves like r^{delta0:.3g} at 0; gamma diverges")
    return GammaTransform(b, float(r_max), delta0)


def alpha_from_beta(beta, r_max: float = math.inf) -> RateFunction:
    """``alpha = beta o gamma^{-1}`` with ``gamma`` by quadrature and the inverse by root finding."""
    gam = gamma_from_beta(beta, r_max)
    b = gam.beta

    def fn(s):
        if s <= 0:
            return 0.0
        r = gam.inverse(s)
        return math.inf if math.isinf(r) else float(b(r))

    out = RateFunction.custom(fn, check=False, name="alpha_from_beta")
    out.params["gamma"] = gam
    return out


def beta_from_alpha_curvature(alpha: RateFunction, K: float = 0.0) -> RateFunction:
    """``beta(r) = inf{s > 0 : 2 sqrt(2 s) alpha^{-1}(s) + K alpha^{-1}(s)^2 >= r}``."""
    if K < 0:
        raise InvalidInput("K must be >= 0")
    if math.isinf(alpha.inverse(1e-12)) and math.isinf(alpha.inverse(1e12)):
        raise InvalidInput("alpha^{-1} is identically +inf")

    def phi(s):
        a = alpha.inverse(s)
        if math.isinf(a):
            return math.inf
        return 2.0 * math.sqrt(2.0 * s) * a + K * a * a

    def fn(r):
        if r <= 0:
            return 0.0
        hi = 1.0
        while phi(hi) < r:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if phi(mid) >= r:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * hi:
                break
        return hi

    return RateFunction.custom(fn, check=False, name="beta_from_alpha", K=float(K))


def power_lsi_alpha(delta: float, C: float) -> Callable:
    """Closed form ``alpha(s)`` for ``beta(r) = r^delta / C``, ``0 < delta < 2``."""
    e = 2.0 * delta / (2.0 - delta)
    coef = (2.0 - delta) ** e / C ** (2.0 / (2.0 - delta))
    return lambda s: coef * np.asarray(s, dtype=float) ** e
