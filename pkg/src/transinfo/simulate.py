"""Path samplers for time averages and empirical deviation probabilities.

Path ``i`` of a plan with seed ``s`` draws all its randomness from the
Philox stream keyed by ``(s, i)``, so ensembles are bitwise reproducible
and independent of how paths are batched.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .diffusion import Diffusion1D, default_grid, stationary_measure, truncation
from .errors import InvalidInput

CHUNK = 4096


class ResolutionWarning(UserWarning):
    """The time step is coarse relative to the state interval."""


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate.

    ``u`` is a vectorized observable; ``initial`` is ``"stationary"``, a
    float, or ``{"grid": [...], "weights": [...]}`` for a discrete initial law.
    ``center`` is the reference level ``mu(u)`` used by deviation events.
    """

    t: float
    dt: float
    n_paths: int
    seed: int = 0
    initial: object = "stationary"
    u: Callable = field(default=lambda x: x, repr=False, compare=False)
    center: float = 0.0
    u_name: str = "x"

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInput("dt must be positive")
        if self.t < self.dt:
            raise InvalidInput("t must be >= dt")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidInput("n_paths must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidInput("seed must be an integer in [0, 2^64)")

    def steps(self) -> np.ndarray:
        n = int(math.ceil(self.t / self.dt - 1e-12))
        h = np.full(n, self.dt)
        h[-1] = self.t - (n - 1) * self.dt
        return h

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "u"}
        if isinstance(d["initial"], np.ndarray):
            d["initial"] = d["initial"].tolist()
        return d


@dataclass(frozen=True)
class Ensemble:
    averages: np.ndarray
    plan: SimulationPlan
    sampler: str
    info: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["path_id", "time_average"])
        for i, a in enumerate(self.averages):
            w.writerow([i, repr(float(a))])
        return buf.getvalue()

    def sidecar(self) -> str:
        return json.dumps({"sampler": self.sampler, "plan": self.plan.describe(), "info": self.info},
                          sort_keys=True, default=str)


def path_stream(seed: int, i: int) -> np.random.Generator:
    """Independent generator for path ``i``."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, i], dtype=np.uint64)))


def _draw(plan: SimulationPlan, lo: int, hi: int, n_steps: int, n_init: int):
    """Per-path uniforms for the initial law and normals for the increments."""
    U = np.empty((hi - lo, n_init))
    Z = np.empty((hi - lo, n_steps))
    for j, i in enumerate(range(lo, hi)):
        g = path_stream(plan.seed, i)
        U[j] = g.random(n_init)
        Z[j] = g.standard_normal(n_steps)
    return U, Z


def _initial(plan: SimulationPlan, U, stationary: Callable):
    init = plan.initial
    if isinstance(init, str):
        if init != "stationary":
            raise InvalidInput(f"unknown initial law {init!r}")
        return stationary(U)
    if isinstance(init, dict):
        grid = np.asarray(init["grid"], dtype=float)
        w = np.asarray(init["weights"], dtype=float)
        if grid.shape != w.shape or np.any(w < 0) or w.sum() <= 0:
            raise InvalidInput("initial law needs matching grid and non-negative weights")
        cdf = np.cumsum(w / w.sum())
        return grid[np.minimum(np.searchsorted(cdf, U[:, 0], side="right"), len(grid) - 1)]
    return np.full(U.shape[0], float(init))


def _accumulate(plan: SimulationPlan, x0, step: Callable, Z, h):
    x = x0
    ux = plan.u(x)
    acc = np.zeros_like(x)
    for k in range(Z.shape[1]):
        x = step(x, Z[:, k], h[k])
        un = plan.u(x)
        acc += 0.5 * h[k] * (ux + un)
        ux = un
    return acc / plan.t


def _run(plan: SimulationPlan, stationary: Callable, step: Callable, n_init: int = 1) -> np.ndarray:
    h = plan.steps()
    out = np.empty(plan.n_paths)
    for lo in range(0, plan.n_paths, CHUNK):
        hi = min(lo + CHUNK, plan.n_paths)
        U, Z = _draw(plan, lo, hi, len(h), n_init)
        out[lo:hi] = _accumulate(plan, _initial(plan, U, stationary), step, Z, h)
    return out


def sample_ou(sigma: float, plan: SimulationPlan) -> Ensemble:
    """Exact transitions of ``dX = sqrt(2) dB - X / sigma^2 dt`` (stationary law ``N(0, sigma^2)``)."""
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    s2 = sigma * sigma

    def step(x, z, h):
        a = math.exp(-h / s2)
        return a * x + sigma * math.sqrt(-math.expm1(-2.0 * h / s2)) * z

    stationary = lambda U: sigma * stats.norm.ppf(U[:, 0])
    return Ensemble(_run(plan, stationary, step), plan, "ou_exact", {"sigma": sigma})


def reflect(x, lo: float, hi: float):
    """Fold ``x`` into ``[lo, hi]`` by repeated reflection."""
    L = hi - lo
    y = np.mod(x - lo, 2.0 * L)
    return lo + np.where(y > L, 2.0 * L - y, y)


def sample_reflected_bm(D: float, plan: SimulationPlan) -> Ensemble:
    """``N(0, 2 dt)`` increments folded into ``[0, D]`` (generator ``f''`` with Neumann ends)."""
    if D <= 0:
        raise InvalidInput("D must be positive")
    _resolution_check(math.sqrt(2.0 * plan.dt), D)
    step = lambda x, z, h: reflect(x + math.sqrt(2.0 * h) * z, 0.0, D)
    stationary = lambda U: D * U[:, 0]
    return Ensemble(_run(plan, stationary, step), plan, "reflected_bm_fold", {"D": D})


def _resolution_check(noise, width):
    if noise > width / 20.0:
        warnings.warn(f"step noise {noise:.3g} exceeds 1/20 of the interval width {width:.3g}",
                      ResolutionWarning, stacklevel=3)


def sample_euler(model: Diffusion1D, plan: SimulationPlan, q: float = 1e-8) -> Ensemble:
    """Euler-Maruyama for ``dX = b dt + sqrt(2 a) dB``, reflected at the (truncated) ends.

    Weak order one; the stationary start samples the discretized speed measure.
    """
    lo, hi = truncation(model, q)
    grid = default_grid(model, 2000, q)
    a_max = float(np.max(model.av(grid)))
    _resolution_check(math.sqrt(2.0 * a_max * plan.dt), hi - lo)
    _, mu, _ = stationary_measure(model, grid)
    cdf = np.cumsum(mu.weights)
    h_cell = grid[1] - grid[0]

    def stationary(U):
        k = np.minimum(np.searchsorted(cdf, U[:, 0], side="right"), len(grid) - 1)
        return np.clip(grid[k] + (U[:, 1] - 0.5) * h_cell, lo, hi)

    def step(x, z, h):
        x_new = x + model.bv(x) * h + np.sqrt(2.0 * model.av(x) * h) * z
        return reflect(x_new, lo, hi)

    return Ensemble(_run(plan, stationary, step, n_init=2), plan, "euler", {"model": model.name,
                                                                            "interval": [lo, hi]})


def empirical_deviation(ensemble, r: float, side: str = "upper", center: float | None = None,
                        level: float = 0.95) -> tuple:
    """``(p_hat, ci_low, ci_high)`` for the event ``average > center + r`` (``side="upper"``)
    or ``average < center - r`` (``side="lower"``), with the Clopper-Pearson interval."""
    avg = ensemble.averages if isinstance(ensemble, Ensemble) else np.asarray(ensemble, dtype=float)
    if avg.size == 0:
        raise InvalidInput("ensemble is empty")
    if center is None:
        center = ensemble.plan.center if isinstance(ensemble, Ensemble) else 0.0
    if side == "upper":
        k = int(np.count_nonzero(avg > center + r))
    elif side == "lower":
        k = int(np.count_nonzero(avg < center - r))
    else:
        raise InvalidInput("side must be 'upper' or 'lower'")
    n = int(avg.size)
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=level, method="exact")
    return k / n, float(ci.low), float(ci.high)
