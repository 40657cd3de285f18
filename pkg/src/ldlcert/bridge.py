"""From limited detection plus measurement dependence to measurement dependence alone.

Postselecting on joint detection lets the hidden variable reweight the input
distribution by at most the ratio of the largest to smallest joint detection
probability.  :func:`transform` maps ``(ell, h)`` and the detection bounds to
the wider measurement-dependence bounds that absorb this; :func:`verify_bridge`
samples finite hidden-variable models and checks the claim numerically.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlations import JointDistribution, Scenario
from .errors import DegenerateBounds, ShapeError
from .ldl import DetectionBounds
from .mdl import MdlBounds, enumerate_mdl_vertices, input_distribution_vertices, membership_mdl


@dataclass(frozen=True)
class BridgeParams:
    mdl: MdlBounds
    detection: DetectionBounds

    def __post_init__(self):
        if self.detection.eta_min <= 0:
            raise DegenerateBounds("eta_min must be > 0 for a finite transformation")

    def to_dict(self) -> dict:
        return {"mdl": self.mdl.to_dict(), "detection": self.detection.to_dict()}


def transform(p: BridgeParams) -> MdlBounds:
    """Measurement-dependence bounds that reproduce every postselected model with parameters ``p``.

    The scale factor is the joint-detection ratio: ``eta_min / eta_max`` for
    joint bounds, its square for per-party bounds.
    """
    d = p.detection
    if d.eta_min <= 0:
        raise DegenerateBounds("eta_min must be > 0")
    lo, hi = d.joint_range(2)
    ratio = lo / hi
    ell = ratio * p.mdl.ell
    h = p.mdl.h / ratio
    clamped = h > 1 or ell < 0
    return MdlBounds(max(ell, 0 * ell), min(h, 1 + 0 * h), clamped=clamped)


@dataclass(frozen=True, eq=False)
class MdldlModel:
    """Finite hidden-variable model with measurement dependence and limited detection (two parties).

    Arrays are indexed by hidden-variable value first:
    ``rho[k]``, ``inputs[k, x, y]``, ``resp_a[k, a, x]``, ``resp_b[k, b, y]``,
    ``det_a[k, x]``, ``det_b[k, y]``.
    """

    scenario: Scenario
    rho: np.ndarray
    inputs: np.ndarray
    resp_a: np.ndarray
    resp_b: np.ndarray
    det_a: np.ndarray
    det_b: np.ndarray

    def detected_joint(self) -> np.ndarray:
        """``P(a, b, x, y, detected | lambda)`` per lambda, shape ``(K, mA, mB, nA, nB)``."""
        pa = self.resp_a * self.det_a[:, None, :]
        pb = self.resp_b * self.det_b[:, None, :]
        return np.einsum("kxy,kax,kby->kabxy", self.inputs, pa, pb)

    def postselected(self) -> JointDistribution:
        per_lam = self.detected_joint()
        mix = np.einsum("k,kabxy->abxy", self.rho, per_lam)
        return JointDistribution(self.scenario, mix / mix.sum(), tol=1e-9)

    def postselected_inputs(self) -> np.ndarray:
        """``P(x, y | detected, lambda)`` from Bayes' rule, shape ``(K, nA, nB)``."""
        det = self.det_a[:, :, None] * self.det_b[:, None, :]
        p_det = np.einsum("kxy,kxy->k", det, self.inputs)
        return det * self.inputs / p_det[:, None, None]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("rho", "inputs", "resp_a", "resp_b", "det_a", "det_b")}


def _pick(rng, lo, hi):
    """Uniform in [lo, hi], with the endpoints over-represented so extremal models get exercised."""
    u = rng.random()
    if u < 0.15:
        return lo
    if u < 0.3:
        return hi
    return lo + (hi - lo) * rng.random()


def _response(rng, m: int, n: int) -> np.ndarray:
    if rng.random() < 0.5:
        r = np.zeros((m, n))
        r[rng.integers(0, m, size=n), np.arange(n)] = 1.0
        return r
    return rng.dirichlet(np.ones(m), size=n).T


def sample_model(rng: np.random.Generator, scenario: Scenario, p: BridgeParams, support: int = 8) -> MdldlModel:
    if scenario.parties != 2:
        raise ShapeError("the bridge harness covers two parties")
    (nA, nB), (mA, mB) = scenario.inputs, scenario.outcomes
    qs = np.array(input_distribution_vertices(nA * nB, MdlBounds(float(p.mdl.ell), float(p.mdl.h))), dtype=float)
    rho = rng.dirichlet(np.ones(support))
    inputs = np.empty((support, nA, nB))
    resp_a = np.empty((support, mA, nA))
    resp_b = np.empty((support, mB, nB))
    det_a = np.empty((support, nA))
    det_b = np.empty((support, nB))
    lo, hi = float(p.detection.eta_min), float(p.detection.eta_max)
    for k in range(support):
        w = rng.dirichlet(np.ones(len(qs)) * (0.3 if rng.random() < 0.5 else 1.0))
        inputs[k] = (w @ qs).reshape(nA, nB)
        resp_a[k] = _response(rng, mA, nA)
        resp_b[k] = _response(rng, mB, nB)
        if p.detection.convention == "per-party":
            det_a[k] = [_pick(rng, lo, hi) for _ in range(nA)]
            det_b[k] = [_pick(rng, lo, hi) for _ in range(nB)]
        else:
            # all products det_a[x] * det_b[y] must land in [lo, hi]
            base = _pick(rng, lo, 1.0)
            top = min(1.0, base * hi / lo)
            det_a[k] = [_pick(rng, base, top) for _ in range(nA)]
            b_lo = lo / det_a[k].min()
            b_hi = min(1.0, hi / det_a[k].max())
            det_b[k] = [_pick(rng, b_lo, b_hi) for _ in range(nB)]
    return MdldlModel(scenario, rho, inputs, resp_a, resp_b, det_a, det_b)


@dataclass
class TrialResult:
    index: int
    feasible: bool
    slack: float
    bayes_error: float
    model: Optional[dict] = None


def _run_trial(seed: int, index: int, scenario: Scenario, p: BridgeParams, target: MdlBounds,
               support: int, vertices) -> TrialResult:
    rng = np.random.default_rng([seed, index])
    model = sample_model(rng, scenario, p, support)
    q_post = model.postselected_inputs()
    # Bayes' rule cross-check: recompute P(xy | detected, lambda) from the full table
    per_lam = model.detected_joint()
    direct = per_lam.sum(axis=(1, 2)) / per_lam.sum(axis=(1, 2, 3, 4))[:, None, None]
    bayes_error = float(np.max(np.abs(direct - q_post)))
    slack = float(min((q_post - float(target.ell)).min(), (float(target.h) - q_post).min()))
    cert = membership_mdl(model.postselected(), target, vertices=vertices)
    return TrialResult(index, cert.feasible, slack, bayes_error,
                       None if cert.feasible else model.to_dict())


def verify_bridge(trials: int, seed: int, scenario: Scenario, p: BridgeParams, *,
                  support: int = 8, threads: int = 1) -> dict:
    """Sample ``trials`` random models and check each postselected distribution against :func:`transform`.

    Trial ``i`` draws from ``numpy.random.default_rng([seed, i])`` so results
    do not depend on ``threads``.
    """
    target = transform(p)
    vertices = enumerate_mdl_vertices(scenario, target)

    def run(i):
        return _run_trial(seed, i, scenario, p, target, support, vertices)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]
    failures = [r for r in results if not r.feasible]
    return {
        "trials": trials,
        "failures": len(failures),
        "min_slack": min((r.slack for r in results), default=math.inf),
        "max_bayes_error": max((r.bayes_error for r in results), default=0.0),
        "convention": p.detection.convention,
        "params": p.to_dict(),
        "transformed": target.to_dict(),
        "seed": seed,
        "support": support,
        "failing_models": [{"trial": r.index, "model": r.model} for r in failures],
    }


def biased_detection_witness(p: BridgeParams, scenario: Scenario = Scenario.binary()) -> MdldlModel:
    """Single-lambda model whose detection pattern pushes the postselected inputs as far as allowed.

    The hidden variable already puts the most weight allowed on input pair
    (0, 0), and detection is highest there and lowest elsewhere.  Whenever
    ``eta_min < eta_max`` the postselected weight of (0, 0) then exceeds ``h``.
    """
    (nA, nB), (mA, mB) = scenario.inputs, scenario.outcomes
    lo, hi = float(p.detection.eta_min), float(p.detection.eta_max)
    q = np.array(input_distribution_vertices(nA * nB, MdlBounds(float(p.mdl.ell), float(p.mdl.h)))[0], dtype=float)
    if p.detection.convention == "per-party":
        det_a = np.array([hi] + [lo] * (nA - 1))
        det_b = np.array([hi] + [lo] * (nB - 1))
    else:
        # joint probabilities: hi on (0, y), lo on (x > 0, y)
        det_a = np.array([1.0] + [lo / hi] * (nA - 1)) * math.sqrt(hi)
        det_b = np.full(nB, math.sqrt(hi))
    resp_a = np.zeros((1, mA, nA))
    resp_a[0, 0, :] = 1.0
    resp_b = np.zeros((1, mB, nB))
    resp_b[0, 0, :] = 1.0
    return MdldlModel(scenario, np.ones(1), q.reshape(1, nA, nB), resp_a, resp_b, det_a[None], det_b[None])
