"""JSON documents for spaces, measures and chains.

A space document has keys ``labels``, ``dist`` (row-major) and optionally
``base_index`` and ``coords`` (points of a line space). A measure adds
``weights``; a chain adds ``Q`` and optionally ``mu``, which is cross-checked
against the stationary law recomputed from ``Q``.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidInput
from .markov import ReversibleChain
from .metric_measure import FiniteMetricSpace, Measure

SPACE_KEYS = {"labels", "dist", "base_index", "coords"}


def space_to_dict(space: FiniteMetricSpace) -> dict:
    doc = {"labels": [_label(x) for x in space.labels], "dist": space.dist.tolist(),
           "base_index": int(space.base_index)}
    if space.is_line:
        doc["coords"] = space.coords.tolist()
    return doc


def _label(x):
    return x.item() if isinstance(x, np.generic) else x


def space_from_dict(doc: dict) -> FiniteMetricSpace:
    if "dist" not in doc:
        raise InvalidInput("space document needs 'dist'")
    dist = np.asarray(doc["dist"], dtype=float)
    n = dist.shape[0]
    labels = doc.get("labels", list(range(n)))
    base = int(doc.get("base_index", 0))
    if "coords" in doc:
        space = FiniteMetricSpace.line(doc["coords"], labels=labels, base_index=base)
        if space.dist.shape != dist.shape or not np.allclose(space.dist, dist, rtol=0, atol=1e-12):
            raise InvalidInput("'coords' disagree with 'dist'")
        return space
    return FiniteMetricSpace(tuple(labels), dist, base)


def measure_to_dict(space: FiniteMetricSpace, mu: Measure) -> dict:
    return {**space_to_dict(space), "weights": mu.weights.tolist()}


def chain_to_dict(chain: ReversibleChain) -> dict:
    return {**space_to_dict(chain.space), "Q": chain.Q.tolist(), "mu": chain.weights.tolist()}


def chain_from_dict(doc: dict) -> ReversibleChain:
    mu = Measure(np.asarray(doc["mu"], dtype=float)) if doc.get("mu") is not None else None
    return ReversibleChain(space_from_dict(doc), np.asarray(doc["Q"], dtype=float), mu)


def from_dict(doc: dict):
    """Chain if ``Q`` is present, ``(space, Measure)`` if ``weights`` is, else a space."""
    if not isinstance(doc, dict):
        raise InvalidInput("document must be a JSON object")
    keys = set(doc)
    if "Q" in keys:
        extra = keys - SPACE_KEYS - {"Q", "mu"}
        if extra:
            raise InvalidInput(f"unknown chain keys: {sorted(extra)}")
        return chain_from_dict(doc)
    if "weights" in keys:
        extra = keys - SPACE_KEYS - {"weights"}
        if extra:
            raise InvalidInput(f"unknown measure keys: {sorted(extra)}")
        return space_from_dict(doc), Measure(np.asarray(doc["weights"], dtype=float))
    extra = keys - SPACE_KEYS
    if extra:
        raise InvalidInput(f"unknown space keys: {sorted(extra)}")
    return space_from_dict(doc)


def dumps(obj) -> str:
    if isinstance(obj, ReversibleChain):
        return json.dumps(chain_to_dict(obj))
    if isinstance(obj, FiniteMetricSpace):
        return json.dumps(space_to_dict(obj))
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[1], Measure):
        return json.dumps(measure_to_dict(*obj))
    raise InvalidInput(f"cannot serialize {type(obj).__name__}")


def loads(text: str):
    return from_dict(json.loads(text))
