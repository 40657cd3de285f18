"""Data model for Bell-test correlations with and without non-detection events.

Tables are numpy arrays whose leading axes are the parties' outcomes and
whose trailing axes are the parties' inputs, i.e. ``table[a1, ..., aN, x1, ..., xN]``.
In lossy tables each outcome axis has one extra slot, at index ``m_i``, that
holds the no-detection event.  User code never sees that index: use
:data:`NO_DETECTION` wherever an outcome label is expected.

Arrays may be ``float64`` or ``object`` arrays of :class:`fractions.Fraction`
(exact mode); validation works for both.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    EmptyData,
    InvalidEfficiency,
    NoDetections,
    ShapeError,
    SignalingInput,
    ValidationError,
    ZeroInputMass,
)

EPS_NORM = 1e-6
EPS_INGEST = 5e-4


class _NoDetection:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_DETECTION"

    def __str__(self):
        return "∅"

    def __reduce__(self):
        return (_NoDetection, ())


NO_DETECTION = _NoDetection()


@dataclass(frozen=True)
class Scenario:
    """Party count, inputs per party and outcomes per party (without the no-detection symbol)."""

    inputs: tuple[int, ...]
    outcomes: tuple[int, ...]

    def __post_init__(self):
        inputs = tuple(int(n) for n in self.inputs)
        outcomes = tuple(int(m) for m in self.outcomes)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outcomes", outcomes)
        if len(inputs) < 1 or len(inputs) != len(outcomes):
            raise ShapeError("need one inputs and one outcomes entry per party, at least one party")
        if min(inputs) < 1 or min(outcomes) < 1:
            raise ShapeError("every party needs at least one input and one outcome")

    @classmethod
    def binary(cls, parties: int = 2) -> "Scenario":
        return cls((2,) * parties, (2,) * parties)

    @property
    def parties(self) -> int:
        return len(self.inputs)

    @property
    def behavior_shape(self) -> tuple[int, ...]:
        return self.outcomes + self.inputs

    @property
    def lossy_shape(self) -> tuple[int, ...]:
        return tuple(m + 1 for m in self.outcomes) + self.inputs

    @property
    def n_input_tuples(self) -> int:
        return int(np.prod(self.inputs))

    def input_tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.inputs))

    def outcome_tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(m) for m in self.outcomes))

    def party(self, i: int) -> "Scenario":
        return Scenario((self.inputs[i],), (self.outcomes[i],))

    def is_binary_bipartite(self) -> bool:
        return self.inputs == (2, 2) and self.outcomes == (2, 2)

    def to_dict(self) -> dict:
        return {"parties": self.parties, "inputs": list(self.inputs), "outcomes": list(self.outcomes)}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        sc = cls(tuple(d["inputs"]), tuple(d["outcomes"]))
        if "parties" in d and int(d["parties"]) != sc.parties:
            raise ShapeError(f"'parties'={d['parties']} disagrees with inputs/outcomes lengths")
        return sc


def _frozen(table) -> np.ndarray:
    arr = np.array(table, dtype=object if _is_exact(table) else float, copy=True)
    arr.setflags(write=False)
    return arr


def _is_exact(table) -> bool:
    arr = np.asarray(table)
    return arr.dtype == object


def _row_sums(table: np.ndarray, parties: int) -> np.ndarray:
    return table.sum(axis=tuple(range(parties)))


def _check_entries(table: np.ndarray, tol: float, what: str) -> None:
    if table.size == 0:
        return
    lo = min(table.flat)
    hi = max(table.flat)
    if lo < -tol or hi > 1 + tol:
        raise ValidationError(f"{what} entries must lie in [0, 1]; found range [{float(lo)}, {float(hi)}]")


def _check_rows(table: np.ndarray, parties: int, tol: float, what: str) -> None:
    sums = _row_sums(table, parties)
    for idx in np.ndindex(sums.shape):
        if abs(sums[idx] - 1) > tol:
            raise ValidationError(f"{what} row for inputs {idx} sums to {float(sums[idx])}, not 1")


@dataclass(frozen=True, eq=False)
class Behavior:
    """Conditional correlations ``P(a1..aN | x1..xN)`` over detected outcomes only."""

    scenario: Scenario
    table: np.ndarray
    tol: float = field(default=EPS_NORM, compare=False)

    def __post_init__(self):
        table = _frozen(self.table)
        if table.shape != self.scenario.behavior_shape:
            raise ShapeError(f"behavior table shape {table.shape} != {self.scenario.behavior_shape}")
        _check_entries(table, self.tol, "behavior")
        _check_rows(table, self.scenario.parties, self.tol, "behavior")
        object.__setattr__(self, "table", table)

    @property
    def exact(self) -> bool:
        return self.table.dtype == object

    def prob(self, outcomes: Sequence[int], inputs: Sequence[int]):
        return self.table[tuple(outcomes) + tuple(inputs)]

    def as_float(self) -> "Behavior":
        return Behavior(self.scenario, self.table.astype(float), self.tol)


@dataclass(frozen=True, eq=False)
class LossyBehavior:
    """Conditional correlations including the no-detection outcome."""

    scenario: Scenario
    table: np.ndarray
    tol: float = field(default=EPS_NORM, compare=False)

    def __post_init__(self):
        table = _frozen(self.table)
        if table.shape != self.scenario.lossy_shape:
            raise ShapeError(f"lossy table shape {table.shape} != {self.scenario.lossy_shape}")
        _check_entries(table, self.tol, "lossy behavior")
        _check_rows(table, self.scenario.parties, self.tol, "lossy behavior")
        object.__setattr__(self, "table", table)

    def _index(self, outcomes) -> tuple[int, ...]:
        idx = []
        for a, m in zip(outcomes, self.scenario.outcomes):
            idx.append(m if a is NO_DETECTION else int(a))
        return tuple(idx)

    def prob(self, outcomes: Sequence, inputs: Sequence[int]):
        return self.table[self._index(outcomes) + tuple(inputs)]

    def detected_block(self) -> np.ndarray:
        """Entries with every party detected, shaped like a behavior table."""
        sl = tuple(slice(0, m) for m in self.scenario.outcomes)
        return self.table[sl]

    def detected_mass(self) -> np.ndarray:
        """Joint detection probability for every input tuple."""
        return _row_sums(self.detected_block(), self.scenario.parties)

    @classmethod
    def from_behavior(cls, b: Behavior) -> "LossyBehavior":
        """Embed a lossless behavior (zero mass on every no-detection entry)."""
        sc = b.scenario
        table = np.zeros(sc.lossy_shape, dtype=b.table.dtype)
        if b.exact:
            table[...] = Fraction(0)
        table[tuple(slice(0, m) for m in sc.outcomes)] = b.table
        return cls(sc, table, b.tol)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Unconditional ``P(a1..aN, x1..xN)``, including the input distribution."""

    scenario: Scenario
    table: np.ndarray
    uncertainty: Optional[np.ndarray] = None
    tol: float = field(default=EPS_NORM, compare=False)

    def __post_init__(self):
        table = _frozen(self.table)
        if table.shape != self.scenario.behavior_shape:
            raise ShapeError(f"joint table shape {table.shape} != {self.scenario.behavior_shape}")
        _check_entries(table, self.tol, "joint distribution")
        total = table.sum()
        if abs(total - 1) > self.tol:
            raise ValidationError(f"joint distribution sums to {float(total)}; tolerance is {self.tol}")
        object.__setattr__(self, "table", table)
        if self.uncertainty is not None:
            unc = np.array(self.uncertainty, dtype=float)
            if unc.shape != table.shape:
                raise ShapeError("uncertainty table must match the joint table shape")
            unc.setflags(write=False)
            object.__setattr__(self, "uncertainty", unc)

    @property
    def total(self):
        return self.table.sum()

    def prob(self, outcomes: Sequence[int], inputs: Sequence[int]):
        return self.table[tuple(outcomes) + tuple(inputs)]

    def input_distribution(self) -> np.ndarray:
        return _row_sums(self.table, self.scenario.parties)

    def renormalized(self) -> "JointDistribution":
        total = self.total
        unc = None if self.uncertainty is None else self.uncertainty / float(total)
        return JointDistribution(self.scenario, self.table / total, unc, self.tol)


@dataclass(frozen=True, eq=False)
class EfficiencyMap:
    """Observed joint detection efficiency for every input tuple."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.size == 0:
            raise ShapeError("empty efficiency map")
        if min(values.flat) <= 0:
            raise InvalidEfficiency("every observed efficiency must be > 0")
        if max(values.flat) > 1 + 1e-12:
            raise InvalidEfficiency("observed efficiencies cannot exceed 1")
        object.__setattr__(self, "values", values)

    def __getitem__(self, inputs):
        return self.values[tuple(inputs)]

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return float(max(self.values.flat) - min(self.values.flat)) <= tol


@dataclass(frozen=True)
class EstimatorConfig:
    """How :func:`from_counts` attaches standard errors."""

    method: str = "multinomial"  # or "bootstrap"
    resamples: int = 1000
    seed: int = 0


def from_counts(counts, scenario: Optional[Scenario] = None,
                config: EstimatorConfig = EstimatorConfig(),
                tol: float = EPS_NORM) -> JointDistribution:
    """Turn a count table over ``(a..., x...)`` into relative frequencies with standard errors."""
    counts = np.asarray(counts)
    if scenario is None:
        if counts.ndim % 2:
            raise ShapeError("cannot infer scenario from an odd-rank count table")
        k = counts.ndim // 2
        scenario = Scenario(counts.shape[k:], counts.shape[:k])
    if counts.shape != scenario.behavior_shape:
        raise ShapeError(f"count table shape {counts.shape} != {scenario.behavior_shape}")
    if np.any(counts < 0):
        raise ValidationError("counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise EmptyData("all counts are zero")
    p = counts / total
    if config.method == "multinomial":
        err = np.sqrt(p * (1 - p) / total)
    elif config.method == "bootstrap":
        rng = np.random.default_rng(config.seed)
        flat = p.ravel().astype(float)
        draws = rng.multinomial(int(total), flat / flat.sum(), size=config.resamples) / total
        err = draws.std(axis=0, ddof=1).reshape(p.shape)
    else:
        raise ValueError(f"unknown estimator method {config.method!r}")
    return JointDistribution(scenario, p.astype(float), err, tol)


def condition_on_inputs(j: JointDistribution) -> tuple[Behavior, np.ndarray]:
    """Split ``P(a, x)`` into ``P(a | x)`` and the input distribution ``P(x)``."""
    sc = j.scenario
    px = j.input_distribution()
    for idx in sc.input_tuples():
        if px[idx] <= 0:
            raise ZeroInputMass(idx)
    table = j.table / px[(np.newaxis,) * sc.parties]
    # Behavior rows are exactly normalized here even when the joint table is not.
    return Behavior(sc, table, tol=max(j.tol, EPS_NORM)), px


def recombine(b: Behavior, input_distribution: np.ndarray, tol: float = EPS_INGEST) -> JointDistribution:
    """Inverse of :func:`condition_on_inputs`."""
    px = np.asarray(input_distribution)
    return JointDistribution(b.scenario, b.table * px[(np.newaxis,) * b.scenario.parties], tol=tol)


def postselect(lossy: LossyBehavior) -> tuple[Behavior, EfficiencyMap]:
    """Condition a lossy behavior on every party registering a detection."""
    sc = lossy.scenario
    eta = lossy.detected_mass()
    for idx in sc.input_tuples():
        if eta[idx] <= 0:
            raise NoDetections(idx)
    table = lossy.detected_block() / eta[(np.newaxis,) * sc.parties]
    return Behavior(sc, table, lossy.tol), EfficiencyMap(eta)


def marginal(b: Behavior, party: int) -> np.ndarray:
    """``P(a_party | x_1..x_N)`` for every input tuple, without averaging over the others' inputs.

    Returned shape is ``(m_party, n_1, ..., n_N)``.
    """
    sc = b.scenario
    if not 0 <= party < sc.parties:
        raise ShapeError(f"party index {party} out of range for {sc.parties} parties")
    others = tuple(i for i in range(sc.parties) if i != party)
    return b.table.sum(axis=others) if others else b.table.copy()


def signaling_gap(b: Behavior) -> float:
    """Largest change of any single-party marginal when another party changes input.

    Zero for non-signaling behaviors.  Postselected data is routinely signaling,
    so this is a diagnostic, never a validation failure.
    """
    sc = b.scenario
    gap = 0.0
    for i in range(sc.parties):
        m = np.asarray(marginal(b, i), dtype=float)
        for j in range(sc.parties):
            if j == i:
                continue
            axis = 1 + j
            spread = m.max(axis=axis) - m.min(axis=axis)
            gap = max(gap, float(spread.max()))
    return gap


def local_marginal(b: Behavior, party: int, tol: float = 1e-9) -> np.ndarray:
    """Single-party table ``P(a_i | x_i)``, shape ``(m_i, n_i)``.

    Raises :class:`SignalingInput` if the marginal moves with another party's input.
    """
    sc = b.scenario
    m = marginal(b, party)
    ref_index = tuple(0 if (k > 0 and k - 1 != party) else slice(None) for k in range(m.ndim))
    ref = m[ref_index]
    shape = [sc.outcomes[party]] + [sc.inputs[j] if j == party else 1 for j in range(sc.parties)]
    gap = np.max(np.abs(np.asarray(m, dtype=float) - np.asarray(ref, dtype=float).reshape(shape)))
    if gap > tol:
        raise SignalingInput(f"party {party}'s marginal depends on other inputs (gap {gap:.3g})")
    return ref


def product_behavior(scenario: Scenario, locals_: Sequence[np.ndarray]) -> Behavior:
    """Behavior of independent parties, each given as a ``(m_i, n_i)`` table ``P(a_i | x_i)``."""
    n = scenario.parties
    if len(locals_) != n:
        raise ShapeError("one local table per party required")
    table = np.ones(scenario.behavior_shape, dtype=object if any(_is_exact(t) for t in locals_) else float)
    for i, t in enumerate(locals_):
        t = np.asarray(t)
        if t.shape != (scenario.outcomes[i], scenario.inputs[i]):
            raise ShapeError(f"local table {i} has shape {t.shape}")
        shape = [1] * (2 * n)
        shape[i] = scenario.outcomes[i]
        shape[n + i] = scenario.inputs[i]
        table = table * t.reshape(shape)
    return Behavior(scenario, table)


def uniform_behavior(scenario: Scenario) -> Behavior:
    k = int(np.prod(scenario.outcomes))
    return Behavior(scenario, np.full(scenario.behavior_shape, 1.0 / k))


def deterministic_behavior(scenario: Scenario, responses: Sequence[Sequence[int]], exact: bool = False) -> Behavior:
    """Local deterministic behavior; ``responses[i][x]`` is party ``i``'s outcome on input ``x``."""
    locals_ = []
    for i, resp in enumerate(responses):
        t = np.zeros((scenario.outcomes[i], scenario.inputs[i]), dtype=object if exact else float)
        if exact:
            t[...] = Fraction(0)
        for x, a in enumerate(resp):
            t[a, x] = Fraction(1) if exact else 1.0
        locals_.append(t)
    return product_behavior(scenario, locals_)
