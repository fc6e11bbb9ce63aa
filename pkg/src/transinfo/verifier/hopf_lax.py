"""Inf-convolution on a finite metric space and the dual W2H criterion."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..errors import InvalidInput
from ..metric_measure import FiniteMetricSpace, weights_of


def hopf_lax_kernel(space: FiniteMetricSpace, t: float) -> np.ndarray:
    if t <= 0:
        raise InvalidInput("t must be positive")
    return space.dist ** 2 / (2.0 * t)


def hopf_lax(space: FiniteMetricSpace, g, t: float) -> np.ndarray:
    """``Q_t g(x) = min_y (g(y) + d(x, y)^2 / (2 t))``."""
    g = np.asarray(g, dtype=float)
    return np.min(g[None, :] + hopf_lax_kernel(space, t), axis=1)


def minplus(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Min-plus matrix product ``(A * B)_xy = min_z A_xz + B_zy``."""
    return np.min(A[:, :, None] + B[None, :, :], axis=1)


def composed_hopf_lax(space: FiniteMetricSpace, g, t: float, s: float) -> np.ndarray:
    """``Q_t Q_s g`` through the composed min-plus kernel (one pass, no nesting)."""
    K = minplus(hopf_lax_kernel(space, t), hopf_lax_kernel(space, s))
    return np.min(np.asarray(g, dtype=float)[None, :] + K, axis=1)


def bobkov_gotze_w2_check(space: FiniteMetricSpace, mu, g, C: float) -> float:
    """``log int exp(Q_1 g / C) dmu - mu(g) / C``; ``<= 0`` for all ``g`` iff ``W_2H(C)``."""
    if C <= 0:
        raise InvalidInput("C must be positive")
    mu = weights_of(mu)
    g = np.asarray(g, dtype=float)
    q = hopf_lax(space, g, 1.0) / C
    pos = mu > 0
    return float(logsumexp(q[pos], b=mu[pos]) - (mu @ g) / C)
