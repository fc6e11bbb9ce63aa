"""Config-driven experiment runner.

A run reads one JSON document::

    {"fixture": {"name": "reflected_bm", "D": 1.0},
     "task": "constants",
     "params": {...},
     "seed": 0,
     "out": "results",
     "tolerances": {"margin": 1e-8}}

and writes ``run.json`` plus CSV side tables into ``out``. Exit status is 0
when every requested check holds, 1 when some check fails (witnesses are
written to ``out/witnesses``) and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diffusion as dif
from .errors import ConfigError, TransinfoError, UnverifiedConstants
from .fixtures import FIXTURES, build_fixture
from .markov import asymptotic_variance, lipschitz_poisson_constant, poincare_constant, sigma_gamma_bound
from .metric_measure import lipschitz_family
from .orlicz import OrliczFunction, check_thm51a, gauge_norm, orlicz_norm, thm51_bounds, verify_phi_sobolev
from .rates import RateFunction, gamma_from_beta
from .simulate import SimulationPlan, empirical_deviation, sample_euler, sample_ou, sample_reflected_bm
from .verifier import bounds
from .verifier.constants import KINDS as CONSTANT_KINDS
from .verifier.constants import estimate_best_constant
from .verifier.equivalence import chernoff_deviation_bound, verify_theorem11
from .verifier.reports import InequalityReport, _jsonable, digest, reports_to_csv
from .verifier.search import dirichlet_densities, tilts

TASKS = ("inspect", "constants", "verify", "deviation", "sweep")
CHECKS = ("W1I", "W2I", "W1H", "W2H", "HI", "cheeger", "thm51a", "TP", "theorem11")
DEFAULT_TOL = {"margin": 1e-8, "phi": 1e-9}

TASK_PARAMS = {
    "inspect": set(),
    "constants": {"kinds", "budget", "rho"},
    "verify": {"checks", "n_densities", "constants", "phi", "beta", "alpha_scale"},
    "deviation": {"t", "r", "n_paths", "dt", "bounds", "phi", "level"},
    "sweep": {"parameter", "values", "quantities"},
}
SWEEP_QUANTITIES = ("c_P", "c_lip_lower", "c_lip_upper", "sigma", "C_rho", "chen_wang")


@dataclass(frozen=True)
class ExperimentConfig:
    fixture: dict
    task: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {"fixture", "task", "params", "seed", "out", "tolerances"}
        extra = set(doc) - allowed
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for key in ("fixture", "task"):
            if key not in doc:
                raise ConfigError(f"config needs '{key}'")
        fixture, task = doc["fixture"], doc["task"]
        if not isinstance(fixture, dict) or "name" not in fixture:
            raise ConfigError("fixture must be an object with a 'name'")
        if fixture["name"] not in FIXTURES:
            raise ConfigError(f"unknown fixture {fixture['name']!r}")
        if task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        extra = set(params) - TASK_PARAMS[task]
        if extra:
            raise ConfigError(f"unknown params for {task}: {sorted(extra)}")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        tol = doc.get("tolerances", {})
        if not isinstance(tol, dict) or set(tol) - set(DEFAULT_TOL):
            raise ConfigError(f"tolerances may only set {sorted(DEFAULT_TOL)}")
        out = doc.get("out", "results")
        if not isinstance(out, str):
            raise ConfigError("out must be a string")
        return cls(dict(fixture), task, dict(params), seed, out, dict(tol))

    def to_dict(self) -> dict:
        return {"fixture": self.fixture, "task": self.task, "params": self.params, "seed": self.seed,
                "out": self.out, "tolerances": self.tolerances}

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOL[key]))


class _Run:
    """Mutable state of one run."""

    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.rng = np.random.default_rng(cfg.seed)
        self.results = {}
        self.failed = []
        try:
            self.chain, self.model, self.grid = build_fixture(cfg.fixture)
        except TransinfoError as exc:
            raise ConfigError(str(exc)) from exc

    def write(self, name: str, text: str):
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, newline="")

    def fail(self, name: str, witness):
        self.failed.append(name)
        self.write(f"witnesses/{name}.json", json.dumps(_jsonable(witness), sort_keys=True))


def _value(v, tol, note=None):
    d = {"value": v, "tolerance": tol}
    if note:
        d["note"] = note
    return d


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _floats(v) -> list:
    """A number or a list of numbers as a list of floats."""
    return [float(x) for x in (v if isinstance(v, (list, tuple)) else [v])]


def _rho(model, name):
    if name in (None, "identity"):
        return dif.RhoMetric.identity()
    if name == "rho_a":
        return dif.rho_a(model)
    raise ConfigError("rho must be 'identity' or 'rho_a'")


# tasks

def task_inspect(run: _Run):
    ch = run.chain
    res = {"n": ch.n, "irreducible": ch.irreducible, "birth_death": ch.is_birth_death,
           "diameter": ch.space.diameter, "sigma": sigma_gamma_bound(ch),
           "mu_min": float(ch.weights.min()), "mu_max": float(ch.weights.max())}
    if run.model is not None:
        res["model"] = run.model.name
        res["interval"] = [run.model.lo, run.model.hi]
        if run.cfg.fixture["name"] != "two_interval":
            res["d1"] = dif.check_d1(run.model)
            res["boundaries"] = dif.check_inaccessible(run.model)
    run.results["inspect"] = res


def task_constants(run: _Run):
    p = run.cfg.params
    ch = run.chain
    res = {"sigma": _value(sigma_gamma_bound(ch), 0.0, "closed form")}
    if ch.irreducible:
        res["c_P"] = _value(poincare_constant(ch).constant, 1e-9, "relative, dense eigensolver")
        br = lipschitz_poisson_constant(ch, rng=run.rng)
        res["c_lip"] = {"lower": br.lower, "upper": br.upper, "method": br.method,
                        "tolerance": br.upper - br.lower}
    if run.model is not None and run.cfg.fixture["name"] != "two_interval":
        rho = _rho(run.model, p.get("rho"))
        res["C_rho"] = _value(dif.c_rho(run.model, rho), 5e-3, f"relative, rho={rho.name}")
        best, arg, _ = dif.chen_wang_gap_bound(run.model)
        res["chen_wang"] = _value(best, 1e-6, f"lower bound on the gap, rho={arg.name}")
    kinds = p.get("kinds", list(CONSTANT_KINDS))
    if set(kinds) - set(CONSTANT_KINDS):
        raise ConfigError(f"kinds must be among {CONSTANT_KINDS}")
    budget = int(p.get("budget", 1))
    brackets = {}
    for kind in kinds:
        bc = estimate_best_constant(ch, kind, budget, run.rng)
        brackets[kind] = {"lower": bc.lower, "upper_hint": bc.upper_hint, "upper_source": bc.upper_source,
                          "verdict": bc.verdict, "tolerance": 0.05, "caveats": list(bc.caveats)}
        if not bc.consistent:
            run.fail(f"bracket_{kind}", {"density": bc.witness, "lower": bc.lower, "upper": bc.upper_hint})
    res["best_constants"] = brackets
    run.results["constants"] = res
    rows = [[k, json.dumps(_jsonable(v), sort_keys=True)] for k, v in res.items()]
    run.write("constants.csv", _csv(["quantity", "value"], rows))


def _densities(run: _Run, n: int, smooth: bool) -> list:
    ch = run.chain
    mu = ch.weights
    dens = []
    dirs = [ch.space.dist[:, ch.space.base_index]]
    if ch.space.is_line:
        dirs.append(ch.space.coords)
    for g in dirs:
        gt = g - mu @ g
        s = np.max(np.abs(gt))
        if s > 0:
            dens.extend(tilts(mu, gt / s, (0.25, 0.5, 1.0, 2.0, -0.5, -1.0)))
    if not smooth:
        dens.extend(dirichlet_densities(mu, max(n - len(dens), 1), run.rng))
    return dens


def _supplied(p, kind):
    c = p.get("constants", {}).get(kind)
    if c is not None and not (isinstance(c, (int, float)) and c > 0):
        raise ConfigError(f"constant for {kind} must be a positive number")
    return c


def _certified_w1(run: _Run):
    ch = run.chain
    if not ch.irreducible:
        return None
    return sigma_gamma_bound(ch) * lipschitz_poisson_constant(ch, rng=run.rng).upper


def task_verify(run: _Run):
    p = run.cfg.params
    checks = p.get("checks", ["W1I", "cheeger"])
    if not isinstance(checks, list) or set(checks) - set(CHECKS):
        raise ConfigError(f"checks must be a list drawn from {CHECKS}")
    if set(p.get("constants", {})) - set(CHECKS):
        raise ConfigError("constants keys must be check names")
    n = int(p.get("n_densities", 100))
    tol = run.cfg.tol("margin")
    ch = run.chain
    reports = []
    for check in checks:
        rep = _verify_one(run, check, n, tol)
        reports.append(rep)
        run.write(f"reports/{check}.json", rep.to_json())
        if not rep.holds:
            run.fail(check, {"kind": rep.kind, "worst_margin": rep.worst_margin, "witness": rep.witness})
    run.results["verify"] = {r.kind: {"holds": r.holds, "worst_margin": r.worst_margin, "tolerance": r.tolerance,
                                      "constants": _jsonable(r.constants)} for r in reports}
    run.write("verify.csv", reports_to_csv([(run.cfg.fixture["name"], r) for r in reports]))


def _verify_one(run: _Run, check: str, n: int, tol: float) -> InequalityReport:
    p = run.cfg.params
    ch = run.chain
    mu = ch.weights
    if check in ("W1I", "W1H", "cheeger", "HI", "W2I", "W2H"):
        C = _supplied(p, check)
        if C is None and check in ("W1I", "W1H"):
            C = _certified_w1(run)
        if C is None and check == "HI":
            C = estimate_best_constant(ch, "HI", 1, run.rng).upper_hint
        if C is None and check != "cheeger":
            raise ConfigError(f"no certified constant for {check} on this fixture; supply params.constants")
        dens = _densities(run, n, smooth=check.startswith("W2"))
        if check == "W1I":
            fn = lambda f: bounds.wpi_margin(ch, f, C, 1.0)
        elif check == "W2I":
            fn = lambda f: bounds.wpi_margin(ch, f, C, 2.0)
        elif check == "W1H":
            fn = lambda f: bounds.wph_margin(ch.space, mu, f, C, 1.0)
        elif check == "W2H":
            fn = lambda f: bounds.wph_margin(ch.space, mu, f, C, 2.0)
        elif check == "HI":
            fn = lambda f: bounds.hi_margin(ch, f, C)
        else:
            C = C if C is not None else lipschitz_poisson_constant(ch, rng=run.rng).upper
            fn = lambda f: bounds.cheeger_margin(ch, f, C)
        caveats = ("smooth tilts only",) if check.startswith("W2") else ()
        rep = bounds.check_margins(check, fn, dens, {"C": C}, tol, caveats)
        return rep
    if check == "theorem11":
        C = _certified_w1(run)
        if C is None:
            raise ConfigError("theorem11 needs an irreducible chain")
        C *= float(p.get("alpha_scale", 1.0))
        fam = lipschitz_family(ch.space, 1.0, 16, run.rng)
        a, b, consistent = verify_theorem11(ch, fam, RateFunction.gaussian(C), rng=run.rng, tol=tol)
        margin = max(a.worst_margin, b.worst_margin) if consistent else math.inf
        return InequalityReport("theorem11_a", {"C": C, "consistent": consistent, "b_margin": b.worst_margin},
                                margin, a.witness, a.n_samples + b.n_samples, tol, (),
                                {"b_witness": b.witness})
    if check == "thm51a":
        phi, C1, C2 = _phi_constants(p)
        ver = verify_phi_sobolev(ch, phi, C1, C2, rng=run.rng, tol=run.cfg.tol("phi"))
        run.write("reports/phi_sobolev.json", ver.to_json())
        try:
            return check_thm51a(ch, phi, C1, C2, verification=ver, n_densities=n, rng=run.rng,
                                tol=run.cfg.tol("phi"))
        except UnverifiedConstants:
            return ver
    if check == "TP":
        beta_doc = p.get("beta")
        if not isinstance(beta_doc, dict) or set(beta_doc) != {"delta", "C"}:
            raise ConfigError("TP needs params.beta = {'delta': d, 'C': c} for beta(r) = r^d / C")
        d, c = float(beta_doc["delta"]), float(beta_doc["C"])
        gam = gamma_from_beta(lambda r: r ** d / c)
        dens = _densities(run, n, smooth=True)
        return bounds.check_margins("TP", lambda f: bounds.tp_check(ch.space, mu, f, gam), dens,
                                    {"delta": d, "C": c}, 1e-3, ("smooth tilts only",))
    raise ConfigError(f"unknown check {check!r}")


def _phi_constants(p):
    doc = p.get("phi")
    if not isinstance(doc, dict) or not {"kind", "C1", "C2"} <= set(doc):
        raise ConfigError("phi must be {'kind': ..., 'C1': ..., 'C2': ..., optional 'q'}")
    extra = set(doc) - {"kind", "C1", "C2", "q"}
    if extra:
        raise ConfigError(f"unknown phi keys: {sorted(extra)}")
    kind = doc["kind"]
    if kind == "power":
        phi = OrliczFunction.power(float(doc.get("q", 2.0)))
    elif kind in ("entropic", "entropic_centered"):
        phi = getattr(OrliczFunction, kind)()
    else:
        raise ConfigError("phi kind must be power, entropic or entropic_centered")
    return phi, float(doc["C1"]), float(doc["C2"])


def _sampler(run: _Run):
    name = run.cfg.fixture["name"]
    m = run.model
    if name == "ou":
        return lambda plan: sample_ou(m.spec["sigma"], plan)
    if name == "reflected_bm":
        return lambda plan: sample_reflected_bm(m.spec["D"], plan)
    if name in ("quartic", "convex"):
        return lambda plan: sample_euler(m, plan)
    raise ConfigError(f"deviation needs a diffusion fixture, not {name!r}")


def task_deviation(run: _Run):
    p = run.cfg.params
    ch = run.chain
    sampler = _sampler(run)
    ts = _floats(p.get("t", [10.0, 50.0]))
    rs = _floats(p.get("r", [0.1, 0.2, 0.3, 0.5]))
    n_paths = int(p.get("n_paths", 10000))
    dt = float(p.get("dt", 0.05))
    level = float(p.get("level", 0.95))
    wanted = p.get("bounds", ["intrinsic", "gaussian", "variance"] + (["a_dev", "b", "c"] if "phi" in p else []))
    known = {"intrinsic", "gaussian", "variance", "a_dev", "b", "c"}
    if set(wanted) - known:
        raise ConfigError(f"bounds must be among {sorted(known)}")
    x = ch.space.coords
    mu = ch.weights
    center = float(mu @ x)
    c_P = poincare_constant(ch).constant
    sC = _certified_w1(run)
    V = asymptotic_variance(ch, x)
    phi_info = {}
    if set(wanted) & {"a_dev", "b", "c"}:
        phi, C1, C2 = _phi_constants(p)
        ver = verify_phi_sobolev(ch, phi, C1, C2, rng=run.rng, tol=run.cfg.tol("phi"))
        run.write("reports/phi_sobolev.json", ver.to_json())
        if not ver.holds:
            run.fail("phi_sobolev", {"worst_margin": ver.worst_margin, "witness": ver.witness})
        psi = phi.conjugate()
        u = x - center
        phi_info = {"C1": C1, "C2": C2, "u_norm": gauge_norm(psi, u, mu),
                    "u2_norm": orlicz_norm(psi, u * u, mu), "up_norm": gauge_norm(psi, np.abs(u), mu)}

    def bound(name, t, r):
        if name == "intrinsic":
            return chernoff_deviation_bound(ch, np.ones(ch.n), x, t, r)
        if name == "gaussian":
            return chernoff_deviation_bound(ch, np.ones(ch.n), x, t, r, alpha=RateFunction.gaussian(sC))
        if name == "variance":
            return bounds.best_variance_deviation_bound(V, c_P, sC, t, r)[0]
        C1, C2 = phi_info["C1"], phi_info["C2"]
        if name == "a_dev":
            return thm51_bounds("a_dev", C1, C2, c_P, t=t, r=r, u_norm=phi_info["u_norm"])
        if name == "b":
            return thm51_bounds("b", C1, C2, c_P, t=t, r=r, u2_norm=phi_info["u2_norm"])
        return thm51_bounds("c", C1, C2, c_P, t=t, r=r, p=1.0, kappa="proof", up_norm=phi_info["up_norm"])

    rows, table = [], []
    for t in ts:
        plan = SimulationPlan(t, dt, n_paths, run.cfg.seed, center=center)
        ens = sampler(plan)
        run.write(f"ensemble_t{t:g}.csv", ens.to_csv())
        run.write(f"ensemble_t{t:g}.json", ens.sidecar())
        for r in rs:
            ph, lo, hi = empirical_deviation(ens, r, level=level)
            vals = {b: bound(b, t, r) for b in wanted}
            dominated = all(lo <= v for v in vals.values())
            row = {"t": t, "r": r, "p_hat": ph, "ci_low": lo, "ci_high": hi, "dominated": dominated, **vals}
            table.append(row)
            rows.append([t, r, repr(ph), repr(lo), repr(hi)] + [repr(float(vals[b])) for b in wanted]
                        + [int(dominated)])
            if not dominated:
                run.fail(f"deviation_t{t:g}_r{r:g}", row)
    run.write("deviation.csv", _csv(["t", "r", "p_hat", "ci_low", "ci_high"] + list(wanted) + ["dominated"], rows))
    run.results["deviation"] = {"rows": table, "constants": {"c_P": c_P, "sigmaC": sC, "V": V, **phi_info},
                                "confidence_level": level, "n_paths": n_paths, "dt": dt}


def task_sweep(run: _Run):
    p = run.cfg.params
    par = p.get("parameter")
    values = p.get("values")
    if not isinstance(par, str) or not isinstance(values, list) or not values:
        raise ConfigError("sweep needs 'parameter' (string) and 'values' (non-empty list)")
    quantities = p.get("quantities", ["c_P", "c_lip_lower", "c_lip_upper", "sigma"])
    if set(quantities) - set(SWEEP_QUANTITIES):
        raise ConfigError(f"quantities must be among {SWEEP_QUANTITIES}")
    rows = []
    for v in values:
        spec = dict(run.cfg.fixture, **{par: v})
        try:
            ch, model, _ = build_fixture(spec)
        except TransinfoError as exc:
            raise ConfigError(str(exc)) from exc
        row = [v]
        br = None
        for q in quantities:
            if q == "c_P":
                row.append(poincare_constant(ch).constant)
            elif q in ("c_lip_lower", "c_lip_upper"):
                br = br or lipschitz_poisson_constant(ch, rng=run.rng)
                row.append(br.lower if q == "c_lip_lower" else br.upper)
            elif q == "sigma":
                row.append(sigma_gamma_bound(ch))
            elif model is None:
                raise ConfigError(f"{q} needs a diffusion fixture")
            elif q == "C_rho":
                row.append(dif.c_rho(model))
            else:
                row.append(dif.chen_wang_gap_bound(model)[0])
        rows.append(row)
    run.write("sweep.csv", _csv([par] + list(quantities), [[r[0]] + [repr(float(x)) for x in r[1:]] for r in rows]))
    run.results["sweep"] = {"parameter": par, "quantities": quantities, "rows": rows}


TASK_FUNCS = {"inspect": task_inspect, "constants": task_constants, "verify": task_verify,
              "deviation": task_deviation, "sweep": task_sweep}


def run(config, out: str | None = None, seed: int | None = None, strict: bool = False) -> int:
    """Run one experiment; returns the exit status (0, 1 or 2)."""
    try:
        doc = config.to_dict() if isinstance(config, ExperimentConfig) else dict(config)
        if seed is not None:
            doc["seed"] = seed
        if out is not None:
            doc["out"] = out
        cfg = ExperimentConfig.from_dict(doc)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(cfg.out)
    with warnings.catch_warnings():
        if strict:
            warnings.simplefilter("error")
        try:
            state = _Run(cfg, outdir)
            outdir.mkdir(parents=True, exist_ok=True)
            TASK_FUNCS[cfg.task](state)
        except (ConfigError, KeyError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        except Warning as exc:
            print(f"warning promoted to error (--strict): {exc}", file=sys.stderr)
            return 2
        except TransinfoError as exc:
            print(f"check failed: {exc}", file=sys.stderr)
            return 1
        except (TypeError, ValueError) as exc:
            print(f"config error: malformed parameter ({exc})", file=sys.stderr)
            return 2
    status = 1 if state.failed else 0
    body = {"config": cfg.to_dict(), "status": status, "failed": state.failed,
            "results": _jsonable(state.results)}
    body["sha256"] = digest(body)
    state.write("run.json", json.dumps(body, sort_keys=True, indent=1))
    print(f"{cfg.task} on {cfg.fixture['name']}: exit {status}"
          + (f" (failed: {', '.join(state.failed)})" if state.failed else ""))
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="transinfo", description="Transport-information inequality experiments.")
    parser.add_argument("--config", metavar="PATH", help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", metavar="DIR", help="override the output directory")
    parser.add_argument("--strict", action="store_true", help="treat warnings as errors")
    parser.add_argument("--list-fixtures", action="store_true", help="list fixture names and exit")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.list_fixtures:
        for name, desc in FIXTURES.items():
            print(f"{name:14s} {desc}")
        return 0
    if not args.config:
        print("config error: --config is required", file=sys.stderr)
        return 2
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("config error: seed must be non-negative", file=sys.stderr)
        return 2
    return run(doc, out=args.out, seed=args.seed, strict=args.strict)


if __name__ == "__main__":
    sys.exit(main())
