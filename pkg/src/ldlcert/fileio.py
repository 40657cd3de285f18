"""JSON file format for counts, joint distributions and (lossy) behaviors.

    {"scenario": {"parties": 2, "inputs": [2, 2], "outcomes": [2, 2]},
     "kind": "counts" | "joint_probabilities" | "behavior" | "lossy_behavior",
     "entries": [{"a": [0, 0], "x": [0, 0], "value": 0.01977, "error": 0.00012}, ...]}

Unlisted entries are 0.  In lossy behaviors an outcome of ``null`` is the
no-detection event.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .correlations import (
    EPS_INGEST,
    NO_DETECTION,
    Behavior,
    EstimatorConfig,
    JointDistribution,
    LossyBehavior,
    Scenario,
    from_counts,
)
from .errors import ParseError, ShapeError

KINDS = ("counts", "joint_probabilities", "behavior", "lossy_behavior")


def _entry_index(scenario: Scenario, entry: dict, lossy: bool) -> tuple[int, ...]:
    try:
        a, x = list(entry["a"]), list(entry["x"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"entry {entry!r} needs 'a' and 'x' lists") from exc
    if len(a) != scenario.parties or len(x) != scenario.parties:
        raise ShapeError(f"entry {entry!r} does not match {scenario.parties} parties")
    idx = []
    for ai, m in zip(a, scenario.outcomes):
        if ai is None:
            if not lossy:
                raise ParseError("no-detection outcome (null) only allowed in lossy_behavior files")
            idx.append(m)
        elif not isinstance(ai, int) or not 0 <= ai < m:
            raise ShapeError(f"outcome {ai!r} out of range [0, {m})")
        else:
            idx.append(ai)
    for xi, n in zip(x, scenario.inputs):
        if not isinstance(xi, int) or not 0 <= xi < n:
            raise ShapeError(f"input {xi!r} out of range [0, {n})")
        idx.append(xi)
    return tuple(idx)


def parse(doc: dict) -> tuple[str, Scenario, np.ndarray, Optional[np.ndarray]]:
    """Return ``(kind, scenario, table, errors)``; ``errors`` is None when no entry carries one."""
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"'kind' must be one of {KINDS}, got {kind!r}")
    try:
        scenario = Scenario.from_dict(doc["scenario"])
    except (KeyError, TypeError) as exc:
        raise ParseError("missing or malformed 'scenario'") from exc
    lossy = kind == "lossy_behavior"
    shape = scenario.lossy_shape if lossy else scenario.behavior_shape
    table = np.zeros(shape)
    errors = np.zeros(shape)
    has_err = False
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise ParseError("'entries' must be a list")
    for e in entries:
        idx = _entry_index(scenario, e, lossy)
        try:
            table[idx] = float(e["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"entry {e!r} has no numeric 'value'") from exc
        if e.get("error") is not None:
            errors[idx] = float(e["error"])
            has_err = True
    return kind, scenario, table, (errors if has_err else None)


def read_json(path: Union[str, Path]) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def load(path: Union[str, Path], *, estimator: EstimatorConfig = EstimatorConfig(),
         tol: float = EPS_INGEST) -> tuple[str, Any]:
    """Load a file and build the matching object.

    counts -> JointDistribution (via ``from_counts``), joint_probabilities ->
    JointDistribution, behavior -> Behavior, lossy_behavior -> LossyBehavior.
    """
    return build(read_json(path), estimator=estimator, tol=tol)


def build(doc: dict, *, estimator: EstimatorConfig = EstimatorConfig(), tol: float = EPS_INGEST):
    kind, scenario, table, errors = parse(doc)
    if kind == "counts":
        return kind, from_counts(table, scenario, estimator, tol=tol)
    if kind == "joint_probabilities":
        return kind, JointDistribution(scenario, table, errors, tol=tol)
    if kind == "behavior":
        return kind, Behavior(scenario, table, tol=tol)
    return kind, LossyBehavior(scenario, table, tol=tol)


def table1(exact: bool = False) -> JointDistribution:
    """The measured unconditional probabilities shipped with the package, unmodified.

    ``exact=True`` reads each printed decimal as a rational number.
    """
    doc = table1_document()
    j = build(doc)[1]
    if not exact:
        return j
    table = np.empty(j.table.shape, dtype=object)
    for idx, v in np.ndenumerate(j.table):
        table[idx] = Fraction(repr(float(v)))
    return JointDistribution(j.scenario, table, j.uncertainty, tol=EPS_INGEST)


def table1_document() -> dict:
    return json.loads(resources.files("ldlcert.data").joinpath("table1.json").read_text())


def _value(v):
    if isinstance(v, Fraction):
        return float(v)
    v = float(v)
    return "inf" if math.isinf(v) else v


def entries(scenario: Scenario, table: np.ndarray, errors: Optional[np.ndarray] = None,
            skip_zero: bool = True) -> list[dict]:
    out = []
    n = scenario.parties
    for idx in np.ndindex(table.shape):
        v = table[idx]
        if skip_zero and v == 0:
            continue
        e = {"a": [int(i) for i in idx[:n]], "x": [int(i) for i in idx[n:]], "value": _value(v)}
        if errors is not None:
            e["error"] = float(errors[idx])
        out.append(e)
    return out


def lossy_entries(scenario: Scenario, table: np.ndarray, skip_zero: bool = True) -> list[dict]:
    out = entries(scenario, table, skip_zero=skip_zero)
    for e in out:
        e["a"] = [None if a == m else a for a, m in zip(e["a"], scenario.outcomes)]
    return out


def document(obj, kind: Optional[str] = None) -> dict:
    """Serialize a Behavior, LossyBehavior or JointDistribution (or raw counts with ``kind='counts'``)."""
    if isinstance(obj, LossyBehavior):
        return {"scenario": obj.scenario.to_dict(), "kind": "lossy_behavior",
                "entries": lossy_entries(obj.scenario, obj.table)}
    if isinstance(obj, Behavior):
        return {"scenario": obj.scenario.to_dict(), "kind": "behavior",
                "entries": entries(obj.scenario, obj.table)}
    if isinstance(obj, JointDistribution):
        return {"scenario": obj.scenario.to_dict(), "kind": "joint_probabilities",
                "entries": entries(obj.scenario, obj.table, obj.uncertainty)}
    if kind == "counts":
        scenario, table = obj
        table = np.asarray(table)
        return {"scenario": scenario.to_dict(), "kind": "counts",
                "entries": [dict(e, value=int(e["value"])) for e in entries(scenario, table)]}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Union[str, Path], doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, Fraction):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if o is NO_DETECTION:
        return None
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
