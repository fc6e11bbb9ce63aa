"""Margins of the individual inequalities and closed-form deviation bounds."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ..errors import InvalidInput
from ..markov import (ReversibleChain, carre_du_champ, fisher_information,
                      lipschitz_poisson_constant, sigma_gamma_bound)
from ..metric_measure import (FiniteMetricSpace, density_of, lipschitz_norm, relative_entropy,
                              transport_distance, weights_of)
from .reports import InequalityReport, TiltingCurve

MARGIN_TOL = 1e-8


def wpi_margin(chain: ReversibleChain, f, C: float, p: float = 1.0) -> float:
    """``W_p(f mu, mu)^2 - 4 C^2 I(f mu | mu)``."""
    f = density_of(f)
    w = transport_distance(chain.space, f * chain.weights, chain.weights, p)
    return w * w - 4.0 * C * C * fisher_information(chain, f)


def wph_margin(space: FiniteMetricSpace, mu, f, C: float, p: float = 1.0) -> float:
    """``W_p(f mu, mu)^2 - 2 C H(f mu | mu)``."""
    f, mu = density_of(f), weights_of(mu)
    w = transport_distance(space, f * mu, mu, p)
    return w * w - 2.0 * C * relative_entropy(f, mu)


def hi_margin(chain: ReversibleChain, f, C: float) -> float:
    """``H(f mu | mu) - 2 C I(f mu | mu)``."""
    f = density_of(f)
    return relative_entropy(f, chain.weights) - 2.0 * C * fisher_information(chain, f)


def cheeger_margin(chain: ReversibleChain, f, C: float | None = None,
                   sigma: float | None = None) -> float:
    """``W_1(f mu, mu) - sigma C mu(sqrt Gamma(f, f))``.

    Defaults: ``sigma`` from :func:`sigma_gamma_bound`, ``C`` the upper end of
    the ``c_Lip,P`` bracket.
    """
    f = density_of(f)
    if sigma is None:
        sigma = sigma_gamma_bound(chain)
    if C is None:
        C = lipschitz_poisson_constant(chain).upper
    w1 = transport_distance(chain.space, f * chain.weights, chain.weights, 1.0)
    gam = np.sqrt(np.clip(carre_du_champ(chain, f), 0.0, None))
    return w1 - sigma * C * float(chain.weights @ gam)


def check_margins(kind: str, margin_fn, densities, constants: dict, tol: float = MARGIN_TOL,
                  caveats=()) -> InequalityReport:
    """Evaluate ``margin_fn`` on each density and keep the stable worst case."""
    worst, arg, count = -math.inf, None, 0
    for f in densities:
        m = float(margin_fn(f))
        count += 1
        if m > worst:
            worst, arg = m, np.asarray(f, dtype=float)
    return InequalityReport(kind, constants, worst, {"density": arg}, count, tol, tuple(caveats),
                            {}, lambda w: margin_fn(np.asarray(w["density"], dtype=float)))


def tilting_curve(mu, g, lambdas) -> TiltingCurve:
    mu = weights_of(mu)
    g = np.asarray(g, dtype=float)
    gt = g - mu @ g
    lambdas = np.asarray(lambdas, dtype=float)
    pos = mu > 0
    log_z = np.array([logsumexp(lam * gt[pos], b=mu[pos]) for lam in lambdas])
    return TiltingCurve(gt, math.nan, lambdas, log_z, mu)


def tilting_mgf_check(mu, g, C: float, lambdas, space: FiniteMetricSpace | None = None,
                      tol: float = MARGIN_TOL):
    """Worst ``log int exp(lam (g - mu(g))) dmu - lam^2 C / 2`` over ``lambdas``.

    ``C`` is the ``W_1H`` constant, so the bound is ``exp(C lam^2 / 2)``. When a
    space is given, ``||g||_Lip <= 1`` is enforced. ``extras['sup_ratio']``
    is ``max 2 log Z(lam) / lam^2``, the smallest ``C`` the grid supports.
    """
    if C <= 0:
        raise InvalidInput("C must be positive")
    lip = math.nan
    if space is not None:
        lip = lipschitz_norm(space, g)
        if lip > 1.0 + 1e-12:
            raise InvalidInput(f"g has Lipschitz norm {lip:.6g} > 1")
    curve = tilting_curve(mu, g, lambdas)
    curve = TiltingCurve(curve.g, lip, curve.lambdas, curve.log_z, curve.mu)
    lam = curve.lambdas
    margins = curve.log_z - 0.5 * C * lam ** 2
    k = int(np.argmax(margins))
    ratios = np.divide(2.0 * curve.log_z, lam ** 2, out=np.zeros_like(lam), where=lam > 0)
    mu_w = weights_of(mu)
    gt = curve.g

    def ev(w):
        l = float(w["lambda"])
        pos = mu_w > 0
        return float(logsumexp(l * gt[pos], b=mu_w[pos]) - 0.5 * C * l * l)

    rep = InequalityReport("tilting", {"C": C}, float(margins[k]), {"lambda": float(lam[k])},
                           len(lam), tol, (), {"sup_ratio": float(ratios.max()),
                                               "convex": curve.is_convex()}, ev)
    return rep, curve


def information_deviation_bound(V: float, c_P: float, sigmaC: float, I: float) -> float:
    """``2 sqrt(I [V/2 + 2 (sigma C)^2 sqrt(c_P I)])``, a bound on ``int g d(nu - mu)``."""
    if min(V, c_P, sigmaC, I) < 0:
        raise InvalidInput("inputs must be non-negative")
    return 2.0 * math.sqrt(I * (0.5 * V + 2.0 * sigmaC ** 2 * math.sqrt(c_P * I)))


def variance_deviation_bound(V: float, c_P: float, sigmaC: float, t: float, r: float,
                             delta: float, l2_prefactor: float = 1.0) -> float:
    """Deviation bound for ``1/t int_0^t g(X_s) ds > mu(g) + r`` driven by the asymptotic variance.

    ``prefactor * exp(-t r^2 / ((1+delta) V + sqrt(((1+delta) V)^2 + 8 c_P (sigma C)^4 r^2 / (delta V))))``
    """
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    if V <= 0 or c_P <= 0 or sigmaC <= 0 or t <= 0 or r < 0:
        raise InvalidInput("V, c_P, sigma C, t must be positive and r >= 0")
    a = (1.0 + delta) * V
    denom = a + math.sqrt(a * a + 8.0 * c_P * sigmaC ** 4 * r * r / (delta * V))
    return l2_prefactor * math.exp(-t * r * r / denom)


def best_variance_deviation_bound(V, c_P, sigmaC, t, r, l2_prefactor=1.0):
    """Minimum over ``delta`` of :func:`variance_deviation_bound` (each delta is valid)."""
    res = minimize_scalar(lambda ld: -t * r * r / _variance_denom(V, c_P, sigmaC, r, math.exp(ld)),
                          bounds=(-20.0, 20.0), method="bounded")
    delta = math.exp(res.x)
    return variance_deviation_bound(V, c_P, sigmaC, t, r, delta, l2_prefactor), delta


def _variance_denom(V, c_P, sigmaC, r, delta):
    a = (1.0 + delta) * V
    return a + math.sqrt(a * a + 8.0 * c_P * sigmaC ** 4 * r * r / (delta * V))


def tp_check(space: FiniteMetricSpace, mu, f, gamma) -> float:
    """``W_2(f mu, mu) - gamma(H(f mu | mu))``."""
    f, mu = density_of(f), weights_of(mu)
    return transport_distance(space, f * mu, mu, 2.0) - float(gamma(relative_entropy(f, mu)))
