import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldlcert.bridge import (
    BridgeParams,
    biased_detection_witness,
    sample_model,
    transform,
    verify_bridge,
)
from ldlcert.correlations import Scenario
from ldlcert.errors import DegenerateBounds
from ldlcert.ldl import DetectionBounds
from ldlcert.mdl import MdlBounds, membership_mdl


def params(ell, h, lo, hi, convention="joint"):
    return BridgeParams(MdlBounds(ell, h), DetectionBounds(lo, hi, convention))


def test_equal_bounds_are_unchanged():
    t = transform(params(0.2, 0.3, 0.7, 0.7))
    assert (t.ell, t.h) == pytest.approx((0.2, 0.3))


def test_joint_example():
    q = Fraction(1, 4)
    t = transform(params(q, q, Fraction(1, 2), Fraction(1)))
    assert (t.ell, t.h) == (Fraction(1, 8), Fraction(1, 2))
    assert not t.clamped


def test_per_party_ratio_scales_by_fourth_power():
    t = transform(params(0.25, 0.25, 0.63, 1.0, "per-party"))
    assert t.ell / t.h == pytest.approx(0.63**4, rel=1e-12)
    assert t.ell / t.h == pytest.approx(0.1575, abs=1e-4)


def test_clamping():
    t = transform(params(0.25, 0.5, 0.1, 1.0))
    assert t.h == 1 and t.clamped


def test_zero_floor_is_degenerate():
    with pytest.raises(DegenerateBounds):
        params(0.25, 0.25, 0.0, 1.0)


@settings(max_examples=100)
@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0, 0.25), st.floats(0.25, 1))
def test_per_party_is_joint_of_squares(a, b, ell, h):
    lo, hi = min(a, b), max(a, b)
    per = transform(params(ell, h, lo, hi, "per-party"))
    joint = transform(params(ell, h, lo * lo, hi * hi, "joint"))
    assert per.ell == pytest.approx(joint.ell, rel=1e-12, abs=1e-15)
    assert per.h == pytest.approx(joint.h, rel=1e-12)
    assert per.clamped == joint.clamped


@settings(max_examples=100)
@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0, 0.05), st.floats(0, 0.05))
def test_wider_detection_never_shrinks(a, b, dlo, dhi):
    lo, hi = min(a, b), max(a, b)
    inner = transform(params(0.2, 0.3, lo, hi))
    outer = transform(params(0.2, 0.3, max(lo - dlo, 1e-3), min(hi + dhi, 1.0)))
    assert outer.ell <= inner.ell + 1e-15
    assert outer.h >= inner.h - 1e-15


@pytest.mark.parametrize("convention", ["joint", "per-party"])
def test_sampled_models_respect_bounds(convention):
    p = params(0.2, 0.3, 0.5, 0.9, convention)
    rng = np.random.default_rng(0)
    lo, hi = p.detection.joint_range()
    for _ in range(20):
        m = sample_model(rng, Scenario.binary(), p)
        joint = m.det_a[:, :, None] * m.det_b[:, None, :]
        assert joint.min() >= lo - 1e-12 and joint.max() <= hi + 1e-12
        assert np.all(m.inputs >= 0.2 - 1e-12) and np.all(m.inputs <= 0.3 + 1e-12)
        assert np.allclose(m.inputs.sum(axis=(1, 2)), 1)


@pytest.mark.parametrize("convention", ["joint", "per-party"])
def test_bridge_holds(convention):
    rep = verify_bridge(40, 11, Scenario.binary(), params(0.2, 0.3, 0.6, 0.9, convention))
    assert rep["failures"] == 0
    assert rep["min_slack"] >= -1e-12
    assert rep["max_bayes_error"] < 1e-12


def test_lossless_uniform_models_stay_local():
    p = params(0.25, 0.25, 1.0, 1.0)
    rep = verify_bridge(10, 0, Scenario.binary(), p)
    assert rep["failures"] == 0
    assert rep["transformed"]["ell"] == rep["transformed"]["h"] == 0.25


def test_reproducible_and_thread_independent():
    p = params(0.2, 0.3, 0.6, 0.9)
    a = verify_bridge(12, 5, Scenario.binary(), p)
    b = verify_bridge(12, 5, Scenario.binary(), p, threads=3)
    assert a == b


@pytest.mark.parametrize("convention", ["joint", "per-party"])
@pytest.mark.parametrize("ell,h", [(0.25, 0.25), (0.2, 0.3)])
def test_witness_needs_transformed_bounds(convention, ell, h):
    p = params(ell, h, 0.5, 0.9, convention)
    post = biased_detection_witness(p).postselected()
    assert membership_mdl(post, transform(p)).feasible
    assert not membership_mdl(post, p.mdl).feasible
