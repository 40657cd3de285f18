"""Closed-form Hardy-type inequalities and the thresholds they imply.

All functions here assume the observed joint efficiency is the same for every
input pair; the general case goes through :func:`ldlcert.ldl.membership_ldlps`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .correlations import Behavior, JointDistribution, condition_on_inputs
from .errors import ShapeError
from .ldl import DetectionBounds

INF = math.inf


@dataclass(frozen=True)
class HardyTerms:
    """``P(00|00), P(01|01), P(10|10), P(00|11)`` of postselected data, with optional standard errors."""

    p1: float
    p2: float
    p3: float
    p4: float
    errors: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self):
        for v in self.values:
            if not 0 <= v <= 1:
                raise ValueError(f"Hardy term {v} outside [0, 1]")

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4)

    def to_dict(self) -> dict:
        d = {"P1": self.p1, "P2": self.p2, "P3": self.p3, "P4": self.p4}
        if self.errors is not None:
            d["errors"] = dict(zip(("P1", "P2", "P3", "P4"), self.errors))
        return d


# (a, b, x, y) of the four terms
HARDY_INDICES = ((0, 0, 0, 0), (0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1))


def _require_binary(scenario) -> None:
    if not scenario.is_binary_bipartite():
        raise ShapeError("Hardy terms need two parties with binary inputs and outputs")


def extract_hardy_terms(data: Union[Behavior, JointDistribution]) -> HardyTerms:
    _require_binary(data.scenario)
    if isinstance(data, JointDistribution):
        b, px = condition_on_inputs(data)
        vals = [float(b.table[i]) for i in HARDY_INDICES]
        errors = None
        if data.uncertainty is not None:
            errors = tuple(_conditional_error(data, i) for i in HARDY_INDICES)
        return HardyTerms(*vals, errors=errors)
    return HardyTerms(*(float(data.table[i]) for i in HARDY_INDICES))


def _conditional_error(j: JointDistribution, idx) -> float:
    """Delta-method error of ``J[idx] / sum of its input block`` for independent entry errors."""
    x, y = idx[2], idx[3]
    block = np.asarray(j.table[:, :, x, y], dtype=float)
    sig = j.uncertainty[:, :, x, y]
    s = block.sum()
    v = float(j.table[idx])
    grad = np.full(block.shape, -v / s**2)
    grad[idx[0], idx[1]] += 1 / s
    return float(np.sqrt(np.sum((grad * sig) ** 2)))


def ldl_value(t: HardyTerms, bounds: DetectionBounds) -> float:
    """``eta_min^2 P1 - eta_min eta_max (P2 + P3) - eta_max^2 P4``; positive refutes the bounds.

    Joint-convention bounds are split symmetrically into per-party levels.
    """
    lo, hi = (float(v) for v in bounds.per_party_levels())
    return lo * lo * t.p1 - lo * hi * (t.p2 + t.p3) - hi * hi * t.p4


def critical_ratio(t: HardyTerms) -> float:
    """Smallest ``eta_min / eta_max`` above which :func:`ldl_value` is positive (``inf`` if never)."""
    if t.p1 == 0:
        return INF
    s = t.p2 + t.p3
    return (s + math.sqrt(s * s + 4 * t.p1 * t.p4)) / (2 * t.p1)


def required_eta_min(t: HardyTerms, eta_max: float) -> float:
    if eta_max == 0:
        return 0.0
    return critical_ratio(t) * eta_max


def mdl_ldl_threshold(j: JointDistribution) -> float:
    """``(J(0101) + J(1010) + J(0011)) / J(0000)`` on unconditional data.

    Nonlocality is shown when ``(l/h) (eta_min/eta_max)^4`` exceeds this value.
    """
    _require_binary(j.scenario)
    t = j.table
    num = float(t[0, 1, 0, 1] + t[1, 0, 1, 0] + t[0, 0, 1, 1])
    den = float(t[0, 0, 0, 0])
    return INF if den == 0 else num / den


def critical_ratio_gradient(t: HardyTerms) -> np.ndarray:
    """Partial derivatives of :func:`critical_ratio` with respect to (P1, P2, P3, P4)."""
    s = t.p2 + t.p3
    d = math.sqrt(s * s + 4 * t.p1 * t.p4)
    r = critical_ratio(t)
    if d == 0:
        return np.array([-r / t.p1, 1 / t.p1, 1 / t.p1, INF])
    ds = (1 + s / d) / (2 * t.p1)
    return np.array([t.p4 / (t.p1 * d) - r / t.p1, ds, ds, 1 / d])


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    method: str

    def to_dict(self) -> dict:
        return {"value": _num(self.value), "error": _num(self.error), "method": self.method}


def _num(v):
    return "inf" if isinstance(v, float) and math.isinf(v) else v


QUANTITIES = ("critical_ratio", "required_eta_min", "mdl_ldl_threshold")


def error_propagation(quantity: str, source: Union[JointDistribution, HardyTerms], method: str = "delta", *,
                      eta_max: Optional[float] = None, seed: int = 0, resamples: int = 2000) -> Estimate:
    """Value and standard error of a derived threshold.

    ``source`` is a JointDistribution with per-entry uncertainties, or
    HardyTerms with errors (not enough for ``mdl_ldl_threshold``).  The
    bootstrap is parametric: entries are redrawn from independent normals
    with the stated errors, clipped at 0, using ``numpy.random.default_rng(seed)``.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    if quantity == "required_eta_min" and eta_max is None:
        raise ValueError("required_eta_min needs eta_max")
    if method not in ("delta", "bootstrap"):
        raise ValueError("method must be 'delta' or 'bootstrap'")
    if quantity == "mdl_ldl_threshold" and not isinstance(source, JointDistribution):
        raise ShapeError("mdl_ldl_threshold needs the unconditional joint distribution")

    if isinstance(source, JointDistribution):
        if source.uncertainty is None:
            raise ValueError("joint distribution carries no uncertainties")
        value = _evaluate(quantity, source.table, eta_max)
        if method == "delta":
            return Estimate(value, _delta_joint(quantity, source, eta_max), method)
        rng = np.random.default_rng(seed)
        base = np.asarray(source.table, dtype=float)
        sig = source.uncertainty
        draws = []
        for _ in range(resamples):
            sample = np.clip(base + sig * rng.standard_normal(base.shape), 0, None)
            draws.append(_evaluate(quantity, sample, eta_max))
        return Estimate(value, _spread(draws), method)

    t = source
    if t.errors is None:
        raise ValueError("Hardy terms carry no errors")
    value = _evaluate_terms(quantity, t.values, eta_max)
    if method == "delta":
        err = _linear_error(critical_ratio_gradient(t), t.errors)
        if quantity == "required_eta_min":
            err *= eta_max
        return Estimate(value, err, method)
    rng = np.random.default_rng(seed)
    vals = np.asarray(t.values)
    errs = np.asarray(t.errors)
    draws = [_evaluate_terms(quantity, np.clip(vals + errs * rng.standard_normal(4), 0, 1), eta_max)
             for _ in range(resamples)]
    return Estimate(value, _spread(draws), method)


def _linear_error(gradient, errors) -> float:
    """First-order error; an infinite slope only matters where the input error is nonzero."""
    errors = np.asarray(errors, dtype=float)
    with np.errstate(invalid="ignore"):
        terms = np.where(errors == 0, 0.0, gradient * errors)
    return float(np.sqrt(np.sum(terms ** 2)))


def _spread(draws) -> float:
    d = np.asarray(draws, dtype=float)
    d = d[np.isfinite(d)]
    return float(d.std(ddof=1)) if d.size > 1 else 0.0


def _terms_from_table(table) -> tuple[float, float, float, float]:
    out = []
    for i in HARDY_INDICES:
        block = float(np.sum(table[:, :, i[2], i[3]]))
        out.append(float(table[i]) / block if block > 0 else 0.0)
    return tuple(out)


def _evaluate_terms(quantity: str, values, eta_max) -> float:
    t = HardyTerms(*(float(v) for v in values))
    if quantity == "critical_ratio":
        return critical_ratio(t)
    return required_eta_min(t, eta_max)


def _evaluate(quantity: str, table, eta_max) -> float:
    if quantity == "mdl_ldl_threshold":
        num = float(table[0, 1, 0, 1] + table[1, 0, 1, 0] + table[0, 0, 1, 1])
        den = float(table[0, 0, 0, 0])
        return INF if den == 0 else num / den
    return _evaluate_terms(quantity, _terms_from_table(table), eta_max)


def _delta_joint(quantity: str, j: JointDistribution, eta_max) -> float:
    sig = j.uncertainty
    if quantity == "mdl_ldl_threshold":
        t = j.table
        den = float(t[0, 0, 0, 0])
        value = mdl_ldl_threshold(j)
        var = (value / den * sig[0, 0, 0, 0]) ** 2
        for idx in ((0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1)):
            var += (sig[idx] / den) ** 2
        return float(math.sqrt(var))
    terms = extract_hardy_terms(j)
    err = _linear_error(critical_ratio_gradient(terms), terms.errors)
    return err * eta_max if quantity == "required_eta_min" else err


def analyze(j: JointDistribution, eta_max: Iterable[float] = (0.5, 0.1), *, errors: Optional[str] = "delta",
            seed: int = 0, renormalize: bool = False, convention: str = "per-party") -> dict:
    """Hardy terms, critical ratio, required eta_min per eta_max and the combined MDL/LDL threshold."""
    if renormalize:
        j = j.renormalized()
    terms = extract_hardy_terms(j)
    eta_max = list(eta_max)
    report = {
        "hardy_terms": terms.to_dict(),
        "critical_ratio": _num(critical_ratio(terms)),
        "required_eta_min": {_key(e): _num(required_eta_min(terms, e)) for e in eta_max},
        "mdl_ldl_threshold": _num(mdl_ldl_threshold(j)),
        "assumptions": ["equal_eta_xy", convention],
        "joint_total": float(j.total),
        "renormalized": renormalize,
    }
    if errors and j.uncertainty is not None:
        report["errors"] = {
            "method": errors,
            "critical_ratio": _num(error_propagation("critical_ratio", j, errors, seed=seed).error),
            "required_eta_min": {
                _key(e): _num(error_propagation("required_eta_min", j, errors, eta_max=e, seed=seed).error)
                for e in eta_max},
            "mdl_ldl_threshold": _num(error_propagation("mdl_ldl_threshold", j, errors, seed=seed).error),
        }
    else:
        report["errors"] = None
    return report


def _key(e: float) -> str:
    return repr(float(e))
