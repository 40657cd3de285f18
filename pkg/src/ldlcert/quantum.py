"""Two-qubit Hardy correlations from the Born rule, ideal and with detector loss."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .correlations import Behavior, LossyBehavior, Scenario
from .errors import InvalidEfficiency, ShapeError, ValidationError

HARDY_THETA = math.acos(math.sqrt(0.5 + 1 / math.sqrt(5)))


@dataclass(frozen=True, eq=False)
class PureTwoQubitState:
    """Amplitudes indexed ``[alice_basis, bob_basis]`` in the computational basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).reshape(2, 2)
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1) > 1e-12:
            raise ValidationError(f"state norm^2 is {norm}, not 1")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(4)


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """Outcome-0 projector vectors per party and input; outcome 1 is the orthogonal complement.

    ``relabel[party][x]`` swaps the two outcome labels for that input.
    """

    vectors: tuple[tuple[np.ndarray, ...], ...]
    relabel: tuple[tuple[bool, ...], ...] = field(default=None)
    theta: Optional[float] = None

    def __post_init__(self):
        vecs = []
        for party in self.vectors:
            row = []
            for v in party:
                v = np.array(v, dtype=complex).reshape(2)
                if abs(np.linalg.norm(v) - 1) > 1e-12:
                    raise ValidationError("measurement vectors must have unit norm")
                v.setflags(write=False)
                row.append(v)
            vecs.append(tuple(row))
        if len(vecs) != 2:
            raise ShapeError("exactly two parties supported")
        object.__setattr__(self, "vectors", tuple(vecs))
        if self.relabel is None:
            object.__setattr__(self, "relabel", tuple(tuple(False for _ in p) for p in vecs))

    @property
    def scenario(self) -> Scenario:
        return Scenario(tuple(len(p) for p in self.vectors), (2, 2))

    def projector_vector(self, party: int, x: int, a: int) -> np.ndarray:
        v = self.vectors[party][x]
        if self.relabel[party][x]:
            a = 1 - a
        return v if a == 0 else _orthogonal(v)

    def with_relabel(self, relabel) -> "MeasurementFamily":
        return MeasurementFamily(self.vectors, tuple(tuple(bool(f) for f in p) for p in relabel), self.theta)


def _orthogonal(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def polarization_vector(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)], dtype=complex)


def hardy_state() -> PureTwoQubitState:
    s3 = math.sqrt(3)
    s5 = math.sqrt(5)
    return PureTwoQubitState(np.array([[(s5 - 1) / (2 * s3), 0], [0, (s5 + 1) / (2 * s3)]]))


def hardy_terms_of(b: Behavior) -> tuple[float, float, float, float]:
    """``P(00|00), P(01|01), P(10|10), P(00|11)``."""
    t = b.table
    return (float(t[0, 0, 0, 0]), float(t[0, 1, 0, 1]), float(t[1, 0, 1, 0]), float(t[0, 0, 1, 1]))


def hardy_measurements(state: Optional[PureTwoQubitState] = None) -> MeasurementFamily:
    """Projective measurements at ``theta = arccos sqrt(1/2 + 1/sqrt 5)``.

    A0 = A0(theta), A1 = A0(theta - pi/4), B0 = A0(-theta), B1 = A1(-theta).
    Outcome 0 is the named vector unless that fails to put zeros on the three
    Hardy terms; then the first per-input relabeling (in lexicographic order)
    that does is used and recorded in ``relabel``.
    """
    th = HARDY_THETA
    fam = MeasurementFamily(
        ((polarization_vector(th), polarization_vector(th - math.pi / 4)),
         (polarization_vector(-th), polarization_vector(-th - math.pi / 4))),
        theta=th,
    )
    state = hardy_state() if state is None else state
    for flips in itertools.product((False, True), repeat=4):
        candidate = fam.with_relabel((flips[:2], flips[2:]))
        _, p2, p3, p4 = hardy_terms_of(born_behavior(state, candidate))
        if max(p2, p3, p4) < 1e-12:
            return candidate
    return fam


def born_behavior(state: PureTwoQubitState, meas: MeasurementFamily) -> Behavior:
    """``P(ab|xy) = |<u_a^x (x) v_b^y | psi>|^2``."""
    sc = meas.scenario
    psi = state.vector()
    table = np.zeros(sc.behavior_shape)
    for x in range(sc.inputs[0]):
        for y in range(sc.inputs[1]):
            for a in range(2):
                for b in range(2):
                    bra = np.kron(meas.projector_vector(0, x, a), meas.projector_vector(1, y, b))
                    table[a, b, x, y] = abs(np.vdot(bra, psi)) ** 2
    return Behavior(sc, table, tol=1e-12)


def _per_party_efficiencies(efficiencies, scenario: Scenario):
    out = []
    for i, e in enumerate(efficiencies):
        arr = np.atleast_1d(np.asarray(e, dtype=object if _has_fraction(e) else float))
        if arr.shape == (1,):
            arr = np.repeat(arr, scenario.inputs[i])
        if arr.shape != (scenario.inputs[i],):
            raise ShapeError(f"party {i} needs {scenario.inputs[i]} efficiencies")
        for v in arr:
            if not 0 < v <= 1:
                raise InvalidEfficiency(f"detection efficiency {v} not in (0, 1]")
        out.append(arr)
    return out


def _has_fraction(e) -> bool:
    from fractions import Fraction
    return any(isinstance(v, Fraction) for v in np.atleast_1d(np.asarray(e, dtype=object)).ravel())


def apply_detection(b: Behavior, efficiencies: Sequence) -> LossyBehavior:
    """Independent per-party loss: party ``i`` on input ``x`` keeps its outcome with probability ``eta_i[x]``.

    ``efficiencies[i]`` is a scalar (same for every input) or one value per input.
    """
    sc = b.scenario
    if len(efficiencies) != sc.parties:
        raise ShapeError("one efficiency entry per party required")
    etas = _per_party_efficiencies(efficiencies, sc)
    n = sc.parties
    exact = b.exact or any(e.dtype == object for e in etas)
    table = np.asarray(b.table, dtype=object if exact else float)
    # Loss channel per party: outcome a -> a with eta, -> no-detection with 1 - eta.
    for i, eta in enumerate(etas):
        shape_eta = [1] * (2 * n)
        shape_eta[n + i] = sc.inputs[i]
        eta_b = eta.reshape(shape_eta)
        kept = table * eta_b
        lost = (table.sum(axis=i, keepdims=True)) * (1 - eta_b)
        table = np.concatenate([kept, lost], axis=i)
    return LossyBehavior(sc, table, tol=max(b.tol, 1e-12))
