"""Limited-detection-local polytopes: vertex enumeration and postselected membership.

A single party's limited-detection strategies for fixed bounds form a
hypercube whose vertices pick, for each input, one outcome that fires with
probability ``eta_min`` or ``eta_max`` and no detection otherwise.  Products
of these over parties span the multi-party polytope.  Postselecting on joint
detection at observed efficiencies slices that polytope; membership of a
postselected behavior is one LP over the product vertices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .correlations import Behavior, EfficiencyMap, LossyBehavior, Scenario
from .errors import ShapeError, TooLarge, Unsolved, ValidationError
from .lp import Certificate, FeasibilityProblem, solve_feasibility

MAX_VERTICES = 10**6
CONVENTIONS = ("per-party", "joint")
UNIFORM_UNKNOWN = "uniform-unknown"


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class DetectionBounds:
    """Bounds ``eta_min <= P(detect | input, lambda) <= eta_max``.

    Under the ``per-party`` convention the bounds apply to each party's
    detection probability; under ``joint`` they apply to the probability that
    both parties detect.
    """

    eta_min: Union[float, Fraction]
    eta_max: Union[float, Fraction]
    convention: str = "per-party"

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"convention must be one of {CONVENTIONS}")
        if not 0 <= self.eta_min <= self.eta_max <= 1:
            raise ValidationError(f"need 0 <= eta_min <= eta_max <= 1, got ({self.eta_min}, {self.eta_max})")

    @property
    def exact(self) -> bool:
        return isinstance(self.eta_min, Fraction) and isinstance(self.eta_max, Fraction)

    @property
    def ratio(self):
        return self.eta_min / self.eta_max if self.eta_max else 0

    def per_party_levels(self) -> tuple:
        """Single-party detection levels.  A joint bound is split symmetrically (square root)."""
        if self.convention == "per-party":
            return self.eta_min, self.eta_max
        out = []
        for v in (self.eta_min, self.eta_max):
            r = _exact_sqrt(v) if isinstance(v, Fraction) else None
            out.append(r if r is not None else math.sqrt(v))
        return tuple(out)

    def joint_range(self, parties: int = 2) -> tuple:
        """Range of the joint detection probability implied by the bounds."""
        if self.convention == "joint":
            return self.eta_min, self.eta_max
        return self.eta_min ** parties, self.eta_max ** parties

    def to_joint(self) -> "DetectionBounds":
        lo, hi = self.joint_range()
        return DetectionBounds(lo, hi, "joint")

    def to_dict(self) -> dict:
        return {"eta_min": float(self.eta_min), "eta_max": float(self.eta_max), "convention": self.convention}


@dataclass(frozen=True)
class LDVertex:
    """One vertex of a single party's limited-detection polytope.

    ``choices[x] = (a_x, eta_x)``: on input ``x`` outcome ``a_x`` fires with
    probability ``eta_x``; otherwise no detection.
    """

    outcomes: int
    choices: tuple

    def table(self, exact: bool = False) -> np.ndarray:
        n = len(self.choices)
        zero = Fraction(0) if exact else 0.0
        t = np.empty((self.outcomes + 1, n), dtype=object if exact else float)
        t[...] = zero
        for x, (a, eta) in enumerate(self.choices):
            eta = Fraction(eta) if exact else float(eta)
            t[a, x] = t[a, x] + eta
            t[self.outcomes, x] = t[self.outcomes, x] + (1 - eta)
        return t


def _levels(lo, hi) -> list:
    return [lo] if lo == hi else [lo, hi]


def enumerate_ld_vertices(party: Scenario, bounds: DetectionBounds) -> list[LDVertex]:
    """All single-party vertices, lexicographic in (input, outcome, level), duplicates removed."""
    if party.parties != 1:
        raise ShapeError("enumerate_ld_vertices takes a single-party scenario")
    m, n = party.outcomes[0], party.inputs[0]
    lo, hi = bounds.per_party_levels()
    per_input = [(a, eta) for a in range(m) for eta in _levels(lo, hi)]
    seen = set()
    out = []
    for choice in itertools.product(per_input, repeat=n):
        # an outcome that fires with probability 0 is indistinguishable from any other
        key = tuple((a if eta else None, eta) for a, eta in choice)
        if key in seen:
            continue
        seen.add(key)
        out.append(LDVertex(m, tuple(choice)))
    return out


def ld_vertex_count(party: Scenario, bounds: DetectionBounds) -> int:
    """Number of distinct single-party vertices, without enumerating them."""
    m, n = party.outcomes[0], party.inputs[0]
    lo, hi = bounds.per_party_levels()
    per_input = sum(1 if eta == 0 else m for eta in _levels(lo, hi))
    return per_input ** n


@dataclass(frozen=True, eq=False)
class VertexSet:
    """Product vertices ``V(a|x) = prod_i V_i(a_i|x_i)`` stacked along axis 0 of ``tables``."""

    scenario: Scenario
    bounds: tuple
    tables: np.ndarray
    labels: tuple = field(repr=False)

    def __len__(self) -> int:
        return self.tables.shape[0]

    @property
    def exact(self) -> bool:
        return self.tables.dtype == object

    def lossy(self, i: int) -> LossyBehavior:
        return LossyBehavior(self.scenario, self.tables[i], tol=0 if self.exact else 1e-12)

    def detected(self) -> np.ndarray:
        """Detected-outcome block of every vertex, shape ``(K, *behavior_shape)``."""
        sl = (slice(None),) + tuple(slice(0, m) for m in self.scenario.outcomes)
        return self.tables[sl]

    def detected_mass(self) -> np.ndarray:
        n = self.scenario.parties
        return self.detected().sum(axis=tuple(range(1, n + 1)))

    def to_dict(self) -> dict:
        from .fileio import lossy_entries
        return {
            "scenario": self.scenario.to_dict(),
            "kind": "ldl_vertices",
            "bounds": [b.to_dict() for b in self.bounds],
            "count": len(self),
            "vertices": [
                {"label": [[list(c) for c in lab] for lab in self.labels[i]],
                 "entries": lossy_entries(self.scenario, self.tables[i])}
                for i in range(len(self))
            ],
        }


def _party_bounds(scenario: Scenario, bounds) -> tuple:
    if isinstance(bounds, DetectionBounds):
        return (bounds,) * scenario.parties
    bounds = tuple(bounds)
    if len(bounds) != scenario.parties:
        raise ShapeError("one DetectionBounds per party required")
    return bounds


def enumerate_ldl_vertices(scenario: Scenario, bounds, *, exact: Optional[bool] = None,
                           max_vertices: int = MAX_VERTICES) -> VertexSet:
    """All products of per-party limited-detection vertices."""
    pbounds = _party_bounds(scenario, bounds)
    if exact is None:
        exact = all(b.exact for b in pbounds)
    total = math.prod(ld_vertex_count(scenario.party(i), pbounds[i]) for i in range(scenario.parties))
    if total > max_vertices:
        raise TooLarge(f"{total} vertices exceeds the cap of {max_vertices}")
    per_party = [enumerate_ld_vertices(scenario.party(i), pbounds[i]) for i in range(scenario.parties)]
    tabs = [np.stack([v.table(exact) for v in vs]) for vs in per_party]
    n = scenario.parties
    # outer product over parties: axis layout (k1..kN, a1..aN, x1..xN)
    out = None
    for i, t in enumerate(tabs):
        shape = [1] * (3 * n)
        shape[i] = t.shape[0]
        shape[n + i] = t.shape[1]
        shape[2 * n + i] = t.shape[2]
        t = t.reshape(shape)
        out = t if out is None else out * t
    tables = out.reshape((total,) + scenario.lossy_shape)
    tables.setflags(write=False)
    labels = tuple(itertools.product(*[[v.choices for v in vs] for vs in per_party]))
    return VertexSet(scenario, pbounds, tables, labels)


def _as_exact(arr) -> np.ndarray:
    out = np.empty(np.shape(arr), dtype=object)
    for idx, v in np.ndenumerate(np.asarray(arr, dtype=object)):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def _exact_scalar(v):
    if isinstance(v, float) and math.isinf(v):
        return v
    return v if isinstance(v, Fraction) else Fraction(v)


def membership_ldlps(p_ps: Behavior, eff: Union[EfficiencyMap, str, None], bounds: DetectionBounds, *,
                     mode: str = "float", vertices: Optional[VertexSet] = None) -> Certificate:
    """Is ``p_ps`` a postselected limited-detection-local behavior?

    ``eff`` is an :class:`EfficiencyMap` of observed joint efficiencies, or
    ``"uniform-unknown"`` (or ``None``) when only equality of the efficiencies
    across input tuples is assumed.

    In uniform-unknown mode the LP asks for weights ``w`` and a common joint
    efficiency ``t`` in the achievable range with ``sum_i w_i V_i = t P``,
    first in rescaled variables and, if that solve cannot be verified, in
    bounded ones (see ``meta["formulation"]``).  The Farkas vector of an infeasible instance is a Bell-like inequality
    ``F(P) <= beta`` on postselected behaviors, carried in
    ``meta["inequality"]``.
    """
    sc = p_ps.scenario
    n = sc.parties
    if vertices is None:
        vertices = enumerate_ldl_vertices(sc, bounds, exact=(mode == "exact"))
    elif vertices.scenario != sc:
        raise ShapeError("vertex set scenario does not match the behavior")
    exact = mode == "exact"
    V = vertices.detected()
    K = V.shape[0]
    P = p_ps.table
    if exact:
        V, P = _as_exact(V), _as_exact(P)
    else:
        V, P = np.asarray(V, dtype=float), np.asarray(P, dtype=float)
    rows = V.reshape(K, -1).T  # one row per detected (outcomes, inputs) entry
    n_det = rows.shape[0]
    one = Fraction(1) if exact else 1.0
    jlo, jhi = bounds.joint_range(n)
    meta = {"convention": bounds.convention, "bounds": bounds.to_dict(), "vertices": K}
    note = ""
    if eff is None or (isinstance(eff, str) and eff == UNIFORM_UNKNOWN):
        meta["efficiencies"] = UNIFORM_UNKNOWN
        try:
            cert, form = solve_feasibility(_rescaled_problem(rows, P, jlo, jhi, exact), mode), "rescaled"
        except Unsolved:
            cert, form = solve_feasibility(_bounded_problem(rows, P, jlo, jhi, exact), mode), "bounded"
        meta["formulation"] = form
        if cert.feasible:
            if form == "rescaled":
                s = cert.point[-1]
                t, weights = 1 / s, cert.point[:K] / s
            else:
                t, weights = cert.point[-1], cert.point[:K]
            meta["uniform_efficiency"] = float(t)
            return _with(cert, meta=meta, point=weights)
        y = cert.dual
        coeffs = y[:n_det].reshape(sc.behavior_shape)
        y0 = y[-1]
        # both forms certify c.V_i <= -y0 on every vertex, so beta = max over t in [jlo, jhi] of -y0 / t
        if y0 > 0:
            beta = -y0 / _s(jhi, exact)
        elif y0 < 0:
            beta = -y0 / _s(jlo, exact)
        else:
            beta = 0 * one
        meta["inequality"] = _inequality(coeffs, beta, P)
        return _with(cert, meta=meta)

    if not isinstance(eff, EfficiencyMap):
        raise TypeError("eff must be an EfficiencyMap or 'uniform-unknown'")
    eta = np.asarray(eff.values)
    if eta.shape != sc.inputs:
        raise ShapeError("efficiency map shape does not match the scenario inputs")
    if exact:
        eta = _as_exact(eta)
    else:
        eta = eta.astype(float)
    meta["efficiencies"] = [float(v) for v in eta.ravel()]
    if min(eta.ravel()) < jlo or max(eta.ravel()) > jhi:
        note = (f"observed efficiencies outside the achievable joint range "
                f"[{float(jlo):.6g}, {float(jhi):.6g}]")
    target = (P * eta[(np.newaxis,) * n]).reshape(-1)
    A = np.vstack([rows, np.full((1, K), one, dtype=object if exact else float)])
    b = np.concatenate([target, np.array([one], dtype=object if exact else float)])
    cert = solve_feasibility(FeasibilityProblem(A, b), mode)
    if cert.feasible:
        return _with(cert, meta=meta, note=note)
    y = cert.dual
    coeffs = y[:n_det].reshape(sc.behavior_shape) * eta[(np.newaxis,) * n]
    meta["inequality"] = _inequality(coeffs, -y[-1], P)
    return _with(cert, meta=meta, note=note)


def _rescaled_problem(rows, P, jlo, jhi, exact) -> FeasibilityProblem:
    """``z = w / t`` and ``s = 1 / t``: rows ``sum z_i V_i = P`` and ``sum z - s = 0``, ``s`` in ``[1/jhi, 1/jlo]``.

    Separation margins are measured on the data scale, which keeps them
    large when ``jlo`` is tiny, but the weights grow like ``1 / jlo``.
    """
    n_det, K = rows.shape
    dtype = object if exact else float
    one = Fraction(1) if exact else 1.0
    zero = 0 * one
    A = np.vstack([np.hstack([rows, np.full((n_det, 1), zero, dtype=dtype)]),
                   np.concatenate([np.full(K, one, dtype=dtype), np.array([-one], dtype=dtype)])[None, :]])
    b = np.concatenate([P.reshape(-1), np.array([zero], dtype=dtype)])
    lower = [0] * K + [1 / _s(jhi, exact)]
    upper = [math.inf] * K + [1 / _s(jlo, exact) if jlo > 0 else math.inf]
    return FeasibilityProblem(A, b, np.array(lower, dtype=object), np.array(upper, dtype=object))


def _bounded_problem(rows, P, jlo, jhi, exact) -> FeasibilityProblem:
    """Weights ``w`` and efficiency ``t``: rows ``sum w_i V_i - t P = 0`` and ``sum w = 1``, ``t`` in ``[jlo, jhi]``.

    Every variable is O(1), so feasible points verify to tight residuals.
    """
    n_det, K = rows.shape
    dtype = object if exact else float
    one = Fraction(1) if exact else 1.0
    zero = 0 * one
    A = np.vstack([np.hstack([rows, -P.reshape(-1, 1)]),
                   np.concatenate([np.full(K, one, dtype=dtype), np.array([zero], dtype=dtype)])[None, :]])
    b = np.concatenate([np.full(n_det, zero, dtype=dtype), np.array([one], dtype=dtype)])
    lower = [0] * K + [_s(jlo, exact)]
    upper = [math.inf] * K + [_s(jhi, exact)]
    return FeasibilityProblem(A, b, np.array(lower, dtype=object), np.array(upper, dtype=object))


def _s(v, exact):
    return _exact_scalar(v) if exact else float(v)


def _inequality(coeffs: np.ndarray, beta, P: np.ndarray) -> dict:
    value = (coeffs * P).sum()
    return {"coefficients": coeffs, "bound": beta, "value": value}


def _with(cert: Certificate, meta: dict, point=None, note: str = "") -> Certificate:
    return Certificate(cert.feasible, cert.mode, point=cert.point if point is None else point,
                       dual=cert.dual, margin=cert.margin, iterations=cert.iterations,
                       note=note or cert.note, meta=meta)


def separation_margin(cert: Certificate, vertices: VertexSet, p_ps: Behavior,
                      eff: Union[EfficiencyMap, str, None] = UNIFORM_UNKNOWN,
                      bounds: Optional[DetectionBounds] = None):
    """Independent check of an infeasibility certificate against the vertex list.

    Using the inequality's coefficients ``c`` only, computes the largest value
    ``F(Q) = c.Q`` any postselected limited-detection-local behavior can reach
    (from the detected blocks of all vertices) and returns ``F(p_ps)`` minus
    that bound.  Positive means the inequality separates ``p_ps``.
    """
    if cert.feasible:
        raise ValueError("feasible certificates have no separating inequality")
    exact = cert.mode == "exact"
    c = cert.meta["inequality"]["coefficients"]
    V = vertices.detected()
    P = p_ps.table
    if exact:
        c, V, P = _as_exact(c), _as_exact(V), _as_exact(P)
    else:
        c, V, P = np.asarray(c, float), np.asarray(V, float), np.asarray(P, float)
    n = p_ps.scenario.parties
    K = V.shape[0]
    bounds = bounds or vertices.bounds[0]
    if eff is None or (isinstance(eff, str) and eff == UNIFORM_UNKNOWN):
        vmax = max((V[i] * c).sum() for i in range(K))
        jlo, jhi = bounds.joint_range(n)
        jlo, jhi = _s(jlo, exact), _s(jhi, exact)
        if vmax > 0:
            if jlo == 0:
                return -math.inf
            bound = vmax / jlo
        else:
            bound = vmax / jhi
        return (c * P).sum() - bound
    # Efficiency-map mode: c already carries the eta_xy factors, so vertices are
    # compared against F on the unscaled data via c / eta.
    eta = np.asarray(eff.values)
    eta = _as_exact(eta) if exact else eta.astype(float)
    c_raw = c / eta[(np.newaxis,) * n]
    vmax = max((V[i] * c_raw).sum() for i in range(K))
    return (c_raw * P * eta[(np.newaxis,) * n]).sum() - vmax


def local_membership(b: Behavior, mode: str = "float") -> Certificate:
    """Standard local-polytope membership (no losses): limited detection with eta_min = eta_max = 1."""
    one = Fraction(1) if mode == "exact" else 1.0
    return membership_ldlps(b, UNIFORM_UNKNOWN, DetectionBounds(one, one), mode=mode)


def _feasible_at(b: Behavior, ratio: float, exact_b: Optional[Behavior]) -> bool:
    try:
        return membership_ldlps(b, UNIFORM_UNKNOWN, DetectionBounds(ratio, 1.0)).feasible
    except Unsolved:
        bounds = DetectionBounds(Fraction(ratio), Fraction(1))
        return membership_ldlps(exact_b or b, UNIFORM_UNKNOWN, bounds, mode="exact").feasible


def locate_threshold(b: Behavior, *, tol: float = 1e-4, exact_behavior: Optional[Behavior] = None) -> dict:
    """Bisect on ``eta_min / eta_max`` for the point where ``b`` stops being a member.

    Uses uniform-unknown efficiencies and ``eta_max = 1`` (only the ratio
    matters there).  Float solves that cannot be verified are redone in exact
    arithmetic.  Both ends of the final bracket are re-certified exactly at
    rationals just outside it; ``exact_behavior`` supplies rational data for
    that step (default: the float table converted exactly).

    Returns ``{"bracket": (lo, hi), "below": Certificate, "above": Certificate}``
    or ``{"bracket": None}`` when ``b`` is a member for every ratio.
    """
    lo, hi = 0.0, 1.0
    if not _feasible_at(b, lo, exact_behavior):
        raise ValidationError("behavior is not a member even without a detection floor")
    if _feasible_at(b, hi, exact_behavior):
        return {"bracket": None}
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _feasible_at(b, mid, exact_behavior):
            lo = mid
        else:
            hi = mid
    lo_q = min(Fraction(lo).limit_denominator(10**5), Fraction(lo))
    hi_q = max(Fraction(hi).limit_denominator(10**5), Fraction(hi))
    eb = exact_behavior or b
    below = membership_ldlps(eb, UNIFORM_UNKNOWN, DetectionBounds(lo_q, Fraction(1)), mode="exact")
    above = membership_ldlps(eb, UNIFORM_UNKNOWN, DetectionBounds(hi_q, Fraction(1)), mode="exact")
    return {"bracket": (lo_q, hi_q), "below": below, "above": above}
