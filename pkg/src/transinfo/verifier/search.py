"""Density search used by the inequality checkers.

Candidates come from symmetric Dirichlet draws around ``mu``, exponential
tilts and small perturbations along test functions, refined by coordinate
ascent that moves mass between pairs of points.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

CONCENTRATIONS = (1.0, 10.0, 100.0)


def dirichlet_densities(mu, n_draws: int, rng, levels=CONCENTRATIONS) -> list:
    """Densities ``nu / mu`` with ``nu ~ Dir(kappa n mu)`` for each concentration ``kappa``."""
    mu = np.asarray(mu, dtype=float)
    pos = mu > 0
    out = []
    for kappa in levels:
        for _ in range(n_draws):
            nu = np.zeros_like(mu)
            nu[pos] = rng.dirichlet(np.maximum(kappa * pos.sum() * mu[pos], 1e-3))
            out.append(_ratio(nu, mu))
    return out


def _ratio(nu, mu):
    return np.divide(nu, mu, out=np.zeros_like(nu), where=mu > 0)


def tilts(mu, g, lambdas) -> list:
    """``exp(lam g) / Z`` for each ``lam``; computed stably in log space."""
    mu = np.asarray(mu, dtype=float)
    g = np.asarray(g, dtype=float)
    out = []
    for lam in lambdas:
        a = lam * g
        a = a - a[mu > 0].max()
        w = np.exp(a)
        out.append(w / (mu @ w))
    return out


def perturbations(mu, g, eps=(0.02, 0.1, 0.3, 0.6, 0.9)) -> list:
    """``1 + eps g~ / max|g~|`` with ``g~`` centred, for each ``eps`` and sign."""
    mu = np.asarray(mu, dtype=float)
    g = np.asarray(g, dtype=float)
    gt = g - mu @ g
    m = np.max(np.abs(gt[mu > 0])) if np.any(mu > 0) else 0.0
    if m <= 0:
        return []
    out = []
    for e in eps:
        out.append(1.0 + e * gt / m)
        out.append(1.0 - e * gt / m)
    return out


def coordinate_ascent(objective: Callable, f0, mu, steps: int = 200, rng=None,
                      step0: float = 0.25, project=None):
    """Maximise ``objective(f)`` over densities by moving mass between point pairs.

    A step transfers ``s * min(nu_i, nu_j)``-scaled mass from ``j`` to ``i``;
    ``s`` halves after a run of failures. ``project`` may map a candidate to
    an admissible one (for example to smooth it). Returns ``(f, value)``.
    """
    rng = np.random.default_rng(rng)
    mu = np.asarray(mu, dtype=float)
    support = np.flatnonzero(mu > 0)
    if support.size < 2:
        return np.asarray(f0, dtype=float), objective(np.asarray(f0, dtype=float))
    nu = np.asarray(f0, dtype=float) * mu
    best = objective(_ratio(nu, mu))
    s = step0
    fails = 0
    for _ in range(steps):
        i, j = rng.choice(support, size=2, replace=False)
        amount = s * max(nu[j], 1e-3 * mu[j])
        amount = min(amount, nu[j])
        if amount <= 0:
            fails += 1
            continue
        trial = nu.copy()
        trial[i] += amount
        trial[j] -= amount
        f = _ratio(trial, mu)
        if project is not None:
            f = project(f)
        val = objective(f)
        if val > best:
            nu, best, fails = f * mu, val, 0
        else:
            fails += 1
            if fails >= 8:
                s *= 0.5
                fails = 0
                if s < 1e-6:
                    break
    return _ratio(nu, mu), best


def best_of(objective: Callable, candidates: Iterable):
    """Stable arg-max: the first candidate attaining the largest value wins."""
    best_val, best_f, count = -np.inf, None, 0
    for f in candidates:
        val = objective(f)
        count += 1
        if val > best_val:
            best_val, best_f = val, f
    return best_f, best_val, count
