import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldlcert.correlations import Behavior, LossyBehavior, Scenario, postselect, signaling_gap
from ldlcert.errors import InvalidEfficiency, ShapeError, ValidationError
from ldlcert.quantum import (
    HARDY_THETA,
    MeasurementFamily,
    PureTwoQubitState,
    apply_detection,
    born_behavior,
    hardy_measurements,
    hardy_state,
    hardy_terms_of,
    polarization_vector,
)
from oracles import hardy_density_matrix_behavior, hardy_p00_exact

# Frozen from oracles.hardy_p00_exact(): exactly 1/12 for this state and these measurements.
HARDY_P00 = 1 / 12


def test_state_amplitudes():
    amp = hardy_state().amplitudes
    assert amp[0, 0].real == pytest.approx(0.35682, abs=1e-5)
    assert amp[1, 1].real == pytest.approx(0.93417, abs=1e-5)
    assert amp[0, 1] == 0 and amp[1, 0] == 0
    assert np.sum(np.abs(amp) ** 2) == pytest.approx(1, abs=1e-15)
    with pytest.raises(ValidationError):
        PureTwoQubitState(np.array([[1, 1], [0, 0]]))


def test_measurement_angles():
    assert math.cos(HARDY_THETA) ** 2 == pytest.approx(0.5 + 1 / math.sqrt(5), abs=1e-15)
    assert np.allclose(polarization_vector(0), [1, 0])
    m = hardy_measurements()
    a0, a1 = m.vectors[0]
    assert abs(np.vdot(a0, a1)) == pytest.approx(math.cos(math.pi / 4), abs=1e-12)


def test_hardy_zeros_and_value(hardy):
    p1, p2, p3, p4 = hardy_terms_of(hardy)
    assert max(p2, p3, p4) < 1e-12
    assert p1 == pytest.approx(HARDY_P00, abs=1e-14)
    assert hardy_p00_exact() == Fraction(1, 12)


def test_matches_density_matrix_oracle(hardy):
    ref = hardy_density_matrix_behavior()
    for idx, v in ref.items():
        assert hardy.table[idx] == pytest.approx(v, abs=1e-14)


def test_hardy_behavior_is_valid(hardy):
    assert signaling_gap(hardy) < 1e-12
    assert np.allclose(hardy.table.sum(axis=(0, 1)), 1, atol=1e-12)


def test_product_state_is_deterministic():
    state = PureTwoQubitState(np.array([[1, 0], [0, 0]]))
    zero = np.array([1, 0])
    m = MeasurementFamily(((zero, zero), (zero, zero)))
    b = born_behavior(state, m)
    assert np.allclose(b.table[0, 0], 1) and np.allclose(b.table[1:, :].sum(), 0)


def test_loss_examples(hardy):
    lossless = apply_detection(hardy, [1.0, 1.0])
    assert np.allclose(lossless.table, LossyBehavior.from_behavior(hardy).table)
    sc = Scenario((1,), (2,))
    single = apply_detection(Behavior(sc, np.array([[1.0], [0.0]])), [[0.5]])
    assert single.table[:, 0].tolist() == [0.5, 0.0, 0.5]
    b, eff = postselect(apply_detection(hardy, [0.3, 0.3]))
    assert np.allclose(eff.values, 0.09, atol=1e-15)
    assert np.max(np.abs(b.table - hardy.table)) < 1e-12


def test_bad_efficiencies(hardy):
    with pytest.raises(InvalidEfficiency):
        apply_detection(hardy, [0.0, 1.0])
    with pytest.raises(InvalidEfficiency):
        apply_detection(hardy, [1.2, 1.0])
    with pytest.raises(ShapeError):
        apply_detection(hardy, [[0.5, 0.5, 0.5], 1.0])


def test_exact_loss_round_trip(hardy):
    from ldlcert.correlations import deterministic_behavior
    b = deterministic_behavior(Scenario.binary(), [[0, 1], [1, 0]], exact=True)
    back, eff = postselect(apply_detection(b, [[Fraction(1, 3), Fraction(2, 7)], Fraction(1, 2)]))
    assert (back.table == b.table).all()
    assert eff.values[1, 0] == Fraction(1, 7)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_fair_sampling_round_trip(seed):
    rng = np.random.default_rng(seed)
    sc = Scenario((int(rng.integers(1, 4)), int(rng.integers(1, 4))), (int(rng.integers(1, 4)), int(rng.integers(1, 4))))
    t = rng.dirichlet(np.ones(int(np.prod(sc.outcomes))), size=sc.n_input_tuples).T.reshape(sc.behavior_shape)
    b = Behavior(sc, t)
    eta = [rng.uniform(0.01, 1, size=n) for n in sc.inputs]
    back, eff = postselect(apply_detection(b, eta))
    assert np.max(np.abs(back.table - b.table)) < 1e-12
    assert np.allclose(eff.values, np.outer(*eta), atol=1e-15)
