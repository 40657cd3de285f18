"""Measurement-dependent-local polytopes over unconditional ``P(a, x)``.

A hidden variable may bias the input distribution within ``l <= P(x|lambda) <= h``.
Vertices are ``q(x) * D(a|x)`` with ``D`` a deterministic local strategy and
``q`` an extreme point of the box ``[l, h]^N`` cut by ``sum q = 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .correlations import JointDistribution, Scenario
from .errors import ShapeError, TooLarge, ValidationError
from .lp import Certificate, FeasibilityProblem, convex_hull_problem, solve_feasibility

MAX_VERTICES = 10**6


@dataclass(frozen=True)
class MdlBounds:
    """``ell <= P(inputs | lambda) <= h``; ``clamped`` marks bounds cut back into [0, 1]."""

    ell: Union[float, Fraction]
    h: Union[float, Fraction]
    clamped: bool = False

    def __post_init__(self):
        if not 0 <= self.ell <= self.h <= 1:
            raise ValidationError(f"need 0 <= ell <= h <= 1, got ({self.ell}, {self.h})")

    @property
    def exact(self) -> bool:
        return isinstance(self.ell, Fraction) and isinstance(self.h, Fraction)

    def check(self, n_inputs: int) -> None:
        if not self.ell * n_inputs <= 1 <= self.h * n_inputs:
            raise ValidationError(f"need ell <= 1/{n_inputs} <= h, got ({self.ell}, {self.h})")

    def to_dict(self) -> dict:
        return {"ell": float(self.ell), "h": float(self.h), "clamped": self.clamped}


def input_distribution_vertices(n_inputs: int, bounds: MdlBounds) -> list[tuple]:
    """Extreme points of ``{q in [ell, h]^n : sum q = 1}``.

    Every coordinate sits at ``ell`` or ``h`` except at most one, which takes
    the remainder.  Candidates are generated that way and deduplicated.
    """
    bounds.check(n_inputs)
    ell, h = bounds.ell, bounds.h
    if ell == h:
        return [tuple([ell] * n_inputs)]
    exact = bounds.exact
    out, seen = [], set()
    for free in range(n_inputs):
        for levels in itertools.product((ell, h), repeat=n_inputs - 1):
            rest = 1 - sum(levels)
            if not ell <= rest <= h:
                if exact or not (ell - 1e-12 <= rest <= h + 1e-12):
                    continue
                rest = min(max(rest, ell), h)
            q = levels[:free] + (rest,) + levels[free:]
            key = q if exact else tuple(round(float(v), 12) for v in q)
            if key not in seen:
                seen.add(key)
                out.append(q)
    return sorted(out, key=lambda q: tuple(-float(v) for v in q))


def deterministic_strategies(scenario: Scenario) -> list[tuple]:
    """Every assignment of an outcome to each (party, input), party-major."""
    per_party = [list(itertools.product(range(m), repeat=n)) for n, m in zip(scenario.inputs, scenario.outcomes)]
    return list(itertools.product(*per_party))


@dataclass(frozen=True, eq=False)
class MdlVertexSet:
    scenario: Scenario
    bounds: MdlBounds
    tables: np.ndarray
    input_vertices: tuple
    strategies: tuple

    def __len__(self) -> int:
        return self.tables.shape[0]

    def to_dict(self) -> dict:
        from .fileio import entries
        return {
            "scenario": self.scenario.to_dict(),
            "kind": "mdl_vertices",
            "bounds": self.bounds.to_dict(),
            "count": len(self),
            "input_vertices": [[float(v) for v in q] for q in self.input_vertices],
            "vertices": [{"entries": entries(self.scenario, self.tables[i])} for i in range(len(self))],
        }


def enumerate_mdl_vertices(scenario: Scenario, bounds: MdlBounds, *, exact: Optional[bool] = None,
                           max_vertices: int = MAX_VERTICES) -> MdlVertexSet:
    if exact is None:
        exact = bounds.exact
    if exact and not bounds.exact:
        bounds = MdlBounds(Fraction(bounds.ell), Fraction(bounds.h), bounds.clamped)
    n_in = scenario.n_input_tuples
    qs = input_distribution_vertices(n_in, bounds)
    n_strat = math.prod(m ** n for n, m in zip(scenario.inputs, scenario.outcomes))
    total = len(qs) * n_strat
    if total > max_vertices:
        raise TooLarge(f"{total} vertices exceeds the cap of {max_vertices}")
    strategies = deterministic_strategies(scenario)
    dtype = object if exact else float
    zero = Fraction(0) if exact else 0.0
    tables = np.empty((total,) + scenario.behavior_shape, dtype=dtype)
    tables[...] = zero
    inputs = list(scenario.input_tuples())
    k = 0
    for q in qs:
        for strat in strategies:
            for xi, x in enumerate(inputs):
                a = tuple(strat[p][x[p]] for p in range(scenario.parties))
                tables[(k,) + a + x] = q[xi] if exact else float(q[xi])
            k += 1
    tables.setflags(write=False)
    return MdlVertexSet(scenario, bounds, tables, tuple(qs), tuple(strategies))


def _exactify(arr) -> np.ndarray:
    out = np.empty(np.shape(arr), dtype=object)
    for idx, v in np.ndenumerate(np.asarray(arr, dtype=object)):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def membership_mdl(j: JointDistribution, bounds: MdlBounds, *, mode: str = "float",
                   vertices: Optional[MdlVertexSet] = None) -> Certificate:
    """Is ``j`` a convex mixture of measurement-dependent local vertices?

    Infeasible results carry ``meta["inequality"]``: coefficients ``c`` and
    bound ``beta`` with ``sum c P <= beta`` on the whole polytope.
    """
    sc = j.scenario
    if vertices is None:
        vertices = enumerate_mdl_vertices(sc, bounds, exact=(mode == "exact"))
    V = vertices.tables.reshape(len(vertices), -1)
    target = np.asarray(j.table).reshape(-1)
    if mode == "exact":
        V, target = _exactify(V), _exactify(target)
    else:
        V, target = V.astype(float), target.astype(float)
    cert = solve_feasibility(convex_hull_problem(V, target), mode)
    meta = {"bounds": bounds.to_dict(), "vertices": len(vertices)}
    if not cert.feasible:
        y = cert.dual
        coeffs = y[:-1].reshape(sc.behavior_shape)
        meta["inequality"] = {"coefficients": coeffs, "bound": -y[-1], "value": (coeffs * np.asarray(
            j.table if mode != "exact" else _exactify(j.table))).sum()}
    return Certificate(cert.feasible, cert.mode, point=cert.point, dual=cert.dual, margin=cert.margin,
                       iterations=cert.iterations, meta=meta)


def mdl_hardy_value(j: JointDistribution, bounds: MdlBounds) -> float:
    """``ell J(0000) - h (J(0101) + J(1010) + J(0011))``; positive refutes MDL at ``(ell, h)``."""
    if not j.scenario.is_binary_bipartite():
        raise ShapeError("the MDL Hardy inequality needs two parties with binary inputs and outputs")
    t = j.table
    return bounds.ell * t[0, 0, 0, 0] - bounds.h * (t[0, 1, 0, 1] + t[1, 0, 1, 0] + t[0, 0, 1, 1])


def is_extremal(q, bounds: MdlBounds, step: Fraction = Fraction(1, 10**6)) -> bool:
    """LP check that ``q`` is not the midpoint of two distinct feasible points.

    ``q`` is non-extremal iff some direction ``d`` with ``sum d = 0`` keeps
    ``q +- d`` in the box.  For every coordinate and sign an exact feasibility
    problem asks for such a ``d`` with ``d_j = +-step``.
    """
    q = [Fraction(v) for v in q]
    ell, h = Fraction(bounds.ell), Fraction(bounds.h)
    n = len(q)
    # |d_i| <= min(q_i - ell, h - q_i) keeps both q + d and q - d inside the box
    width = [min(v - ell, h - v) for v in q]
    if min(width) < 0 or sum(q) != 1:
        raise ValidationError("point is not in the input-distribution polytope")
    for j in range(n):
        for sign in (1, -1):
            A = np.array([[Fraction(1)] * n, [Fraction(int(i == j)) for i in range(n)]], dtype=object)
            b = np.array([Fraction(0), sign * step], dtype=object)
            lower = np.array([-w for w in width], dtype=object)
            upper = np.array(width, dtype=object)
            if solve_feasibility(FeasibilityProblem(A, b, lower, upper), "exact").feasible:
                return False
    return True


def _solve_square(rows: list[list[Fraction]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    """Gauss-Jordan over the rationals; None when singular."""
    n = len(rows)
    M = [list(r) + [v] for r, v in zip(rows, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return [M[r][n] for r in range(n)]


def brute_force_box_vertices(n: int, bounds: MdlBounds) -> set[tuple]:
    """Vertices of ``{q in [ell, h]^n : sum q = 1}`` by brute force over active sets.

    Every choice of ``n - 1`` bound constraints (any coordinate, either side)
    together with the normalization row is solved exactly; nonsingular
    solutions that satisfy all constraints are vertices.
    """
    ell, h = Fraction(bounds.ell), Fraction(bounds.h)
    bound_rows = [(i, v) for i in range(n) for v in (ell, h)]
    out = set()
    for active in itertools.combinations(bound_rows, n - 1):
        rows = [[Fraction(int(k == i)) for k in range(n)] for i, _ in active] + [[Fraction(1)] * n]
        rhs = [v for _, v in active] + [Fraction(1)]
        q = _solve_square(rows, rhs)
        if q is not None and all(ell <= v <= h for v in q):
            out.add(tuple(q))
    return out
