"""Immutable result records for inequality checks."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

KINDS = ("WpI", "WpH", "W1I", "W2I", "W1H", "W2H", "alpha_TVI", "HI", "cheeger", "TP",
         "bobkov_gotze", "tilting", "theorem11_a", "theorem11_b", "phi_sobolev",
         "orlicz_poincare", "thm51a", "thm51c", "cor54")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _unjson(x):
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    if isinstance(x, list):
        return [_unjson(v) for v in x]
    if isinstance(x, dict):
        return {k: _unjson(v) for k, v in x.items()}
    return x


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of checking one inequality over a finite set of test objects.

    ``worst_margin`` is ``lhs - rhs`` maximised over the tested set, so
    ``worst_margin <= tolerance`` means the inequality held on every sample.
    ``witness`` holds the maximising object; ``evaluator`` (not serialized)
    recomputes the margin from it.
    """

    kind: str
    constants: dict
    worst_margin: float
    witness: dict
    n_samples: int
    tolerance: float
    caveats: tuple = ()
    extras: dict = field(default_factory=dict)
    evaluator: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def holds(self) -> bool:
        return bool(self.worst_margin <= self.tolerance)

    def reevaluate(self) -> float:
        if self.evaluator is None:
            raise ValueError("report carries no evaluator")
        return float(self.evaluator(self.witness))

    def to_dict(self) -> dict:
        body = {
            "kind": self.kind,
            "constants": _jsonable(self.constants),
            "worst_margin": _jsonable(self.worst_margin),
            "witness": _jsonable(self.witness),
            "n_samples": int(self.n_samples),
            "tolerance": float(self.tolerance),
            "holds": self.holds,
            "caveats": list(self.caveats),
            "extras": _jsonable(self.extras),
        }
        body["sha256"] = digest(body)
        return body

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, doc: dict, verify: bool = True) -> "InequalityReport":
        doc = dict(doc)
        stored = doc.pop("sha256", None)
        if verify and stored is not None and stored != digest(doc):
            raise ValueError("report hash mismatch")
        out = cls(doc["kind"], _unjson(doc["constants"]), _unjson(doc["worst_margin"]),
                  _unjson(doc["witness"]), doc["n_samples"], doc["tolerance"],
                  tuple(doc.get("caveats", ())), _unjson(doc.get("extras", {})))
        if "holds" in doc and bool(doc["holds"]) != out.holds:
            raise ValueError("stored verdict disagrees with margin and tolerance")
        return out

    @classmethod
    def from_json(cls, text: str, verify: bool = True) -> "InequalityReport":
        return cls.from_dict(json.loads(text), verify)


def digest(body: dict) -> str:
    payload = json.dumps({k: v for k, v in body.items() if k != "sha256"}, sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def reports_to_csv(rows) -> str:
    """CSV table with one row per ``(fixture, report)`` pair."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["fixture", "kind", "worst_margin", "tolerance", "holds", "n_samples", "witness_id"])
    for fixture, rep in rows:
        wid = digest({"w": _jsonable(rep.witness)})[:12]
        w.writerow([fixture, rep.kind, repr(float(rep.worst_margin)), rep.tolerance,
                    int(rep.holds), rep.n_samples, wid])
    return buf.getvalue()


@dataclass(frozen=True, eq=False)
class TiltingCurve:
    """Exponential tilts ``f_lam = exp(lam g) / Z(lam)`` of ``mu`` along a centred ``g``."""

    g: np.ndarray
    lip_norm: float
    lambdas: np.ndarray
    log_z: np.ndarray
    mu: np.ndarray

    def density(self, k: int) -> np.ndarray:
        a = self.lambdas[k] * self.g
        return np.exp(a - self.log_z[k])

    def densities(self):
        return [self.density(k) for k in range(len(self.lambdas))]

    def is_convex(self, tol: float = 1e-10) -> bool:
        lam, lz = self.lambdas, self.log_z
        if len(lam) < 3:
            return True
        slopes = np.diff(lz) / np.diff(lam)
        return bool(np.all(np.diff(slopes) >= -tol * max(1.0, float(np.abs(slopes).max()))))
