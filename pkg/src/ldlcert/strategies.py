"""Partial assignment of non-detections.

Each party keeps its real clicks, which happen with probability ``eta``.  On
a miss it draws an outcome from a local table with probability
``eta_min_target`` and otherwise reports no detection.  Postselecting on
joint clicks gives a three-term mixture of the nonlocal behavior, the two
half-local products and the fully local product.  Target 0 is pure
postselection and target 1 is full assignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .correlations import Behavior, local_marginal, product_behavior
from .errors import ShapeError, ValidationError
from .ldl import DetectionBounds


@dataclass(frozen=True)
class MixtureCoefficients:
    """Weights of ``P_NL``, of the two half-local products together, and of the fully local product."""

    nonlocal_: float
    half_local: float
    local: float

    def as_tuple(self) -> tuple:
        return self.nonlocal_, self.half_local, self.local


def mixture_coefficients(eta, eta_min_target) -> MixtureCoefficients:
    """Mixture weights for a real efficiency ``eta`` and assignment probability ``eta_min_target``; they sum to 1."""
    if not 0 < eta <= 1:
        raise ValidationError(f"eta must lie in (0, 1], got {eta}")
    if not 0 <= eta_min_target <= 1:
        raise ValidationError(f"eta_min_target must lie in [0, 1], got {eta_min_target}")
    miss = (1 - eta) * eta_min_target
    d = (eta + miss) ** 2
    return MixtureCoefficients(eta * eta / d, 2 * eta * miss / d, miss * miss / d)


def effective_detection(eta, eta_min_target) -> DetectionBounds:
    """Per-party bounds met by the completed data: a party clicks with probability at least ``eta + (1 - eta) eta_min``."""
    mixture_coefficients(eta, eta_min_target)
    return DetectionBounds(eta + (1 - eta) * eta_min_target, 1 if isinstance(eta, Fraction) else 1.0)


def _uniform_local(m: int, n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((m, n), dtype=object)
        out[...] = Fraction(1, m)
        return out
    return np.full((m, n), 1.0 / m)


def assignment_mix(p_nl: Behavior, eta, eta_min_target, local_a: Optional[np.ndarray] = None,
                   local_b: Optional[np.ndarray] = None) -> Behavior:
    """Postselected behavior after partially assigning each party's non-detections.

    ``local_a`` and ``local_b`` are ``P(a|x)`` tables of shape ``(m, n)`` and
    default to uniform outcomes.  Raises SignalingInput when ``p_nl`` has no
    well-defined single-party marginals.
    """
    sc = p_nl.scenario
    if sc.parties != 2:
        raise ShapeError("partial assignment is defined for two parties")
    c = mixture_coefficients(eta, eta_min_target)
    exact = p_nl.exact
    tables = []
    for i, given in enumerate((local_a, local_b)):
        shape = (sc.outcomes[i], sc.inputs[i])
        t = _uniform_local(*shape, exact) if given is None else np.asarray(given)
        if t.shape != shape:
            raise ShapeError(f"local table for party {i} has shape {t.shape}, expected {shape}")
        if np.any(np.asarray(t, dtype=float) < 0) or np.max(np.abs(np.asarray(t.sum(axis=0), dtype=float) - 1)) > 1e-9:
            raise ValidationError(f"local table for party {i} is not a conditional distribution")
        tables.append(t)
    marg_a = local_marginal(p_nl, 0)
    marg_b = local_marginal(p_nl, 1)
    half = product_behavior(sc, [marg_a, tables[1]]).table + product_behavior(sc, [tables[0], marg_b]).table
    full = product_behavior(sc, tables).table
    table = c.nonlocal_ * p_nl.table + c.half_local / 2 * half + c.local * full
    return Behavior(sc, table, tol=1e-9)
