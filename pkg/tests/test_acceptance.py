"""Exit criteria.  Each test records one PASS/FAIL line (shown in the pytest summary) and then asserts."""

import time
from fractions import Fraction

import numpy as np
import pytest

from acceptance_log import record
from ldlcert.analysis import analyze
from ldlcert.bridge import BridgeParams, transform, verify_bridge
from ldlcert.correlations import Behavior, Scenario, condition_on_inputs, local_marginal, postselect, recombine
from ldlcert.fileio import table1
from ldlcert.ldl import (
    UNIFORM_UNKNOWN,
    DetectionBounds,
    enumerate_ld_vertices,
    enumerate_ldl_vertices,
    locate_threshold,
    membership_ldlps,
    separation_margin,
)
from ldlcert.mdl import MdlBounds, enumerate_mdl_vertices, input_distribution_vertices, is_extremal, membership_mdl
from ldlcert.quantum import apply_detection, born_behavior, hardy_measurements, hardy_state
from ldlcert.strategies import assignment_mix

pytestmark = pytest.mark.acceptance

# Infeasible certificates produced by earlier criteria, re-checked by criterion 10:
# (certificate, vertex set, behavior, efficiencies)
EMITTED = []


@pytest.fixture(scope="module")
def table_report():
    t0 = time.perf_counter()
    rep = analyze(table1())
    return rep, time.perf_counter() - t0


def test_criterion_01_threshold(table_report):
    rep, dt = table_report
    r = rep["critical_ratio"]
    ok = abs(r - 0.267) <= 0.002 and dt < 1
    assert record(1, ok, f"critical_ratio={r:.5f} (target 0.267 +- 0.002), {dt:.3f}s")


def test_criterion_02_combined_bound(table_report):
    rep, dt = table_report
    v = rep["mdl_ldl_threshold"]
    ok = abs(v - 0.15529) <= 0.0005 and dt < 1
    assert record(2, ok, f"mdl_ldl_threshold={v:.5f} (target 0.15529 +- 0.0005), {dt:.3f}s")


def test_criterion_03_illustrations(table_report):
    rep, dt = table_report
    a, b = rep["required_eta_min"]["0.5"], rep["required_eta_min"]["0.1"]
    ok = abs(a - 0.134) <= 0.002 and abs(b - 0.027) <= 0.001 and dt < 1
    assert record(3, ok, f"required_eta_min: {a:.5f} at 0.5 (0.134 +- 0.002), {b:.5f} at 0.1 (0.027 +- 0.001)")


def test_criterion_04_hardy_realization():
    t0 = time.perf_counter()
    b = born_behavior(hardy_state(), hardy_measurements())
    dt = time.perf_counter() - t0
    t = b.table
    zeros = max(t[0, 1, 0, 1], t[1, 0, 1, 0], t[0, 0, 1, 1])
    p = t[0, 0, 0, 0]
    ok = zeros < 1e-10 and 0.0901 <= p <= 0.0903 and dt < 1
    assert record(4, ok, f"Hardy zeros max {zeros:.1e} (< 1e-10); P(00|00)={p:.6f} (target [0.0901, 0.0903]), {dt:.3f}s")


def test_criterion_05_arbitrary_floor():
    b = born_behavior(hardy_state(), hardy_measurements())
    t0 = time.perf_counter()
    bounds = DetectionBounds(1e-3, 1.0)
    vs = enumerate_ldl_vertices(b.scenario, bounds)
    cert = membership_ldlps(b, UNIFORM_UNKNOWN, bounds, vertices=vs)
    sep = separation_margin(cert, vs, b) if not cert.feasible else float("-inf")
    free = membership_ldlps(b, UNIFORM_UNKNOWN, DetectionBounds(0.0, 1.0))
    dt = time.perf_counter() - t0
    if not cert.feasible:
        EMITTED.append((cert, vs, b, UNIFORM_UNKNOWN))
    ok = (not cert.feasible) and cert.margin > 1e-9 and sep > 1e-9 and free.feasible and dt < 5
    assert record(5, ok, f"eta_min=1e-3: {cert.status} (LP margin {float(cert.margin):.2e}, vertex check {sep:.2e}); "
                         f"eta_min=0: {free.status}, {dt:.2f}s")


def test_criterion_06_two_sided_data_check():
    b, _ = condition_on_inputs(table1())
    eb, _ = condition_on_inputs(table1(exact=True))
    t0 = time.perf_counter()
    res = locate_threshold(b, tol=1e-4, exact_behavior=eb)
    dt = time.perf_counter() - t0
    if res["bracket"] is None:
        assert record(6, False, "data are members for every ratio")
    lo, hi = res["bracket"]
    below, above = res["below"], res["above"]
    if not above.feasible:
        vs = enumerate_ldl_vertices(eb.scenario, DetectionBounds(hi, Fraction(1)), exact=True)
        EMITTED.append((above, vs, eb, UNIFORM_UNKNOWN))
    flip = float(lo + hi) / 2
    confirmed = below.feasible and not above.feasible
    ok = confirmed and abs(flip - 0.267) <= 0.005 and dt < 30
    assert record(6, ok, f"flip at {flip:.5f} in [{float(lo):.5f}, {float(hi):.5f}] (target 0.267 +- 0.005); "
                         f"exact: {below.status} below, {above.status} above, {dt:.1f}s")


def test_criterion_07_vertex_counts():
    t0 = time.perf_counter()
    party = Scenario((2,), (2,))
    single = len(enumerate_ld_vertices(party, DetectionBounds(0.3, 0.8)))
    product = len(enumerate_ldl_vertices(Scenario.binary(), DetectionBounds(0.3, 0.8)))
    lossless = len(enumerate_ldl_vertices(Scenario.binary(), DetectionBounds(1.0, 1.0)))
    extremal = True
    n_q = 0
    for ell, h in ((Fraction(1, 5), Fraction(2, 5)), (Fraction(1, 10), Fraction(1, 2)), (Fraction(0), Fraction(1))):
        bounds = MdlBounds(ell, h)
        qs = input_distribution_vertices(4, bounds)
        n_q += len(qs)
        extremal &= all(is_extremal(q, bounds) for q in qs)
    dt = time.perf_counter() - t0
    ok = (single, product, lossless) == (16, 256, 16) and extremal and dt < 5
    assert record(7, ok, f"LD vertices {single}/{product}/{lossless} (16/256/16); {n_q} MDL input vertices "
                         f"extremal={extremal}, {dt:.2f}s")


def test_criterion_08_bridge():
    t0 = time.perf_counter()
    failures = {}
    for convention in ("joint", "per-party"):
        p = BridgeParams(MdlBounds(0.2, 0.3), DetectionBounds(0.6, 0.9, convention))
        rep = verify_bridge(200, 2024, Scenario.binary(), p)
        failures[convention] = rep["failures"]
    rng = np.random.default_rng(8)
    squaring = True
    for _ in range(100):
        lo, hi = np.sort(rng.uniform(0.05, 1, size=2))
        ell = rng.uniform(0, 0.25)
        h = rng.uniform(0.25, 1)
        per = transform(BridgeParams(MdlBounds(ell, h), DetectionBounds(lo, hi, "per-party")))
        joint = transform(BridgeParams(MdlBounds(ell, h), DetectionBounds(lo * lo, hi * hi, "joint")))
        squaring &= np.isclose(per.ell, joint.ell, rtol=1e-12, atol=1e-15) and np.isclose(per.h, joint.h, rtol=1e-12)
    dt = time.perf_counter() - t0
    ok = all(v == 0 for v in failures.values()) and squaring and dt < 60
    assert record(8, ok, f"bridge failures {failures} over 200 trials each; squaring relation {squaring}, {dt:.1f}s")


def test_criterion_09_round_trips():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst_fair = 0.0
    worst_mix = 0.0
    hardy = born_behavior(hardy_state(), hardy_measurements())
    for _ in range(500):
        sc = Scenario(tuple(rng.integers(1, 4, size=2)), tuple(rng.integers(1, 4, size=2)))
        k = int(np.prod(sc.outcomes))
        b = Behavior(sc, rng.dirichlet(np.ones(k), size=sc.n_input_tuples).T.reshape(sc.behavior_shape))
        eta = [rng.uniform(0.01, 1, size=n) for n in sc.inputs]
        back, _ = postselect(apply_detection(b, eta))
        worst_fair = max(worst_fair, float(np.max(np.abs(back.table - b.table))))

        v = rng.uniform(0, 1)
        p_nl = Behavior(hardy.scenario, (1 - v) * hardy.table + v * 0.25)
        e = rng.uniform(0.01, 1)
        la, lb = rng.dirichlet(np.ones(2), size=2).T, rng.dirichlet(np.ones(2), size=2).T
        pure = assignment_mix(p_nl, e, 0.0, la, lb).table
        worst_mix = max(worst_mix, float(np.max(np.abs(pure - p_nl.table))))
        ma, mb = local_marginal(p_nl, 0), local_marginal(p_nl, 1)
        full = (e * e * p_nl.table
                + e * (1 - e) * (np.einsum("ax,by->abxy", ma, lb) + np.einsum("ax,by->abxy", la, mb))
                + (1 - e) ** 2 * np.einsum("ax,by->abxy", la, lb))
        worst_mix = max(worst_mix, float(np.max(np.abs(assignment_mix(p_nl, e, 1.0, la, lb).table - full))))
    dt = time.perf_counter() - t0
    ok = worst_fair <= 1e-12 and worst_mix <= 1e-12 and dt < 10
    assert record(9, ok, f"500 cases: fair-sampling max dev {worst_fair:.1e}, assignment limits max dev "
                         f"{worst_mix:.1e} (<= 1e-12), {dt:.2f}s")


def _certificate_battery():
    """Independent infeasible instances across both polytopes and both arithmetic modes."""
    hardy = born_behavior(hardy_state(), hardy_measurements())
    out = []
    for lo, mode in ((1e-3, "float"), (0.1, "float"), (0.5, "float"), (Fraction(1, 10), "exact")):
        hi = Fraction(1) if mode == "exact" else 1.0
        bounds = DetectionBounds(lo, hi)
        vs = enumerate_ldl_vertices(hardy.scenario, bounds, exact=(mode == "exact"))
        out.append(("ldl", membership_ldlps(hardy, UNIFORM_UNKNOWN, bounds, mode=mode, vertices=vs), vs, hardy,
                    UNIFORM_UNKNOWN))
    b, eff = postselect(apply_detection(hardy, [0.3, 0.3]))
    bounds = DetectionBounds(0.3, 0.3)
    vs = enumerate_ldl_vertices(hardy.scenario, bounds)
    out.append(("ldl", membership_ldlps(b, eff, bounds, vertices=vs), vs, b, eff))
    j = recombine(hardy, np.full((2, 2), 0.25))
    for bounds, mode in ((MdlBounds(0.25, 0.25), "float"), (MdlBounds(Fraction(1, 4), Fraction(1, 4)), "exact"),
                         (MdlBounds(0.2, 0.3), "float")):
        vs = enumerate_mdl_vertices(j.scenario, bounds, exact=(mode == "exact"))
        out.append(("mdl", membership_mdl(j, bounds, mode=mode, vertices=vs), vs, j, None))
    return out


def _mdl_margin(cert, vs, j):
    exact = cert.mode == "exact"
    c = cert.meta["inequality"]["coefficients"]
    to = (lambda a: np.vectorize(Fraction, otypes=[object])(a)) if exact else (lambda a: np.asarray(a, float))
    c, T, P = to(c), to(vs.tables), to(j.table)
    return (c * P).sum() - max((c * t).sum() for t in T)


def test_criterion_10_certificate_soundness():
    cases = [("ldl",) + e for e in EMITTED] + _certificate_battery()
    worst = {"float": float("inf"), "exact": float("inf")}
    checked = 0
    for kind, cert, vs, data, eff in cases:
        if cert.feasible:
            continue
        m = separation_margin(cert, vs, data, eff) if kind == "ldl" else _mdl_margin(cert, vs, data)
        worst[cert.mode] = min(worst[cert.mode], m)
        checked += 1
    ok = checked > 0 and worst["float"] > 1e-9 and worst["exact"] > 0
    assert record(10, ok, f"{checked} infeasible certificates re-checked against all vertices; "
                          f"min float margin {float(worst['float']):.2e} (> 1e-9), "
                          f"min exact margin {float(worst['exact']):.2e} (> 0)")
