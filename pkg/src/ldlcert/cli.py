"""``ldlcert`` command line.

Exit codes: 0 success (or feasible), 1 infeasible, 2 bad input or usage,
3 shape/size/parameter problems, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import analyze
from .bridge import BridgeParams, verify_bridge
from .correlations import (
    Behavior,
    EfficiencyMap,
    EstimatorConfig,
    JointDistribution,
    LossyBehavior,
    Scenario,
    condition_on_inputs,
    postselect,
    recombine,
)
from .errors import LdlcertError, ParseError, ShapeError, TooLarge, Unsolved, ValidationError
from .fileio import _default, build, document, read_json, write_json
from .ldl import CONVENTIONS, UNIFORM_UNKNOWN, DetectionBounds, enumerate_ldl_vertices, membership_ldlps
from .mdl import MdlBounds, enumerate_mdl_vertices, membership_mdl
from .quantum import apply_detection, born_behavior, hardy_measurements, hardy_state
from .strategies import assignment_mix


class UsageError(Exception):
    """Bad flag combination; exits with code 2."""


def _number(text: str):
    """Float, or an exact Fraction when written as ``p/q``."""
    try:
        return Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _threads(args) -> int:
    env = os.environ.get("LDLCERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"LDLCERT_THREADS must be an integer, got {env!r}")
    return max(1, getattr(args, "threads", 1) or 1)


def _flags(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        out[k] = str(v) if isinstance(v, Fraction) else v
    return out


def _report(args, body: dict) -> dict:
    return {"tool": "ldlcert", "version": __version__, "command": args.command, "flags": _flags(args), **body}


def _emit(args, doc: dict) -> None:
    if args.out:
        write_json(args.out, doc)


def _load(path: str, args) -> tuple[str, object]:
    estimator = EstimatorConfig(method=getattr(args, "estimator", "multinomial"), seed=getattr(args, "seed", 0))
    return build(read_json(path), estimator=estimator)


def _as_joint(kind: str, obj) -> JointDistribution:
    """Joint distribution for analysis.  Conditional data are recombined with uniform inputs."""
    if isinstance(obj, JointDistribution):
        return obj
    if isinstance(obj, LossyBehavior):
        obj = postselect(obj)[0]
    px = np.full(obj.scenario.inputs, 1.0 / obj.scenario.n_input_tuples)
    return recombine(obj, px)


def _as_behavior(obj) -> tuple[Behavior, Optional[EfficiencyMap]]:
    if isinstance(obj, JointDistribution):
        return condition_on_inputs(obj)[0], None
    if isinstance(obj, LossyBehavior):
        return postselect(obj)
    return obj, None


def cmd_analyze(args) -> int:
    kind, obj = _load(args.input, args)
    j = _as_joint(kind, obj)
    errors = None if args.errors == "none" else args.errors
    body = analyze(j, args.eta_max, errors=errors, seed=args.seed, renormalize=args.renormalize,
                   convention=args.convention)
    body["input_kind"] = kind
    _emit(args, _report(args, body))
    t = body["hardy_terms"]
    print(f"Hardy terms  P1={t['P1']:.6g} P2={t['P2']:.6g} P3={t['P3']:.6g} P4={t['P4']:.6g}")
    err = body["errors"] or {}
    print(f"critical eta_min/eta_max  {body['critical_ratio']}" + (f" +- {err['critical_ratio']:.2g}" if err else ""))
    for e, v in body["required_eta_min"].items():
        print(f"required eta_min at eta_max={e}  {v}")
    print(f"MDL+LDL threshold  {body['mdl_ldl_threshold']}"
          + (f" +- {err['mdl_ldl_threshold']:.2g}" if err else ""))
    return 0


def _efficiencies(choice: str, observed: Optional[EfficiencyMap]):
    if choice == UNIFORM_UNKNOWN:
        return UNIFORM_UNKNOWN
    if choice == "observed":
        if observed is None:
            raise UsageError("--efficiencies observed needs lossy_behavior input")
        return observed
    doc = read_json(choice)
    try:
        return EfficiencyMap(np.asarray(doc["efficiencies"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{choice}: expected {{\"efficiencies\": [[...], ...]}}") from exc


def cmd_membership(args) -> int:
    kind, obj = _load(args.input, args)
    if args.mdl:
        ell, h = args.mdl
        j = _as_joint(kind, obj)
        cert = membership_mdl(j, MdlBounds(ell, h), mode=args.mode)
        test = "mdl"
    else:
        if args.eta_min is None or args.eta_max is None:
            raise UsageError("membership needs --eta-min and --eta-max, or --mdl L H")
        b, observed = _as_behavior(obj)
        eff = _efficiencies(args.efficiencies, observed)
        cert = membership_ldlps(b, eff, DetectionBounds(args.eta_min, args.eta_max, args.convention), mode=args.mode)
        test = "ldlps"
    _emit(args, _report(args, {"test": test, "input_kind": kind, "certificate": cert.to_dict()}))
    print(f"{test} membership: {cert.status} (mode {cert.mode}, margin {float(cert.margin):.3g})")
    if not cert.feasible and "inequality" in cert.meta:
        ineq = cert.meta["inequality"]
        print(f"separating inequality: value {float(ineq['value']):.6g} > bound {float(ineq['bound']):.6g}")
    if cert.note:
        print(f"note: {cert.note}")
    return 0 if cert.feasible else 1


def cmd_quantum(args) -> int:
    if args.shots is not None and args.shots <= 0:
        raise UsageError("--shots must be positive")
    b = born_behavior(hardy_state(), hardy_measurements())
    if args.emit == "behavior" and args.loss is None:
        doc = document(b)
    else:
        loss = args.loss if args.loss is not None else [1.0, 1.0]
        lossy = apply_detection(b, loss)
        if args.emit == "behavior":
            doc = document(lossy)
        else:
            if args.shots is None:
                raise UsageError("--emit counts needs --shots")
            sc = b.scenario
            joint = np.asarray(lossy.table, dtype=float) / sc.n_input_tuples
            p = np.clip(joint.reshape(-1), 0, None)
            rng = np.random.default_rng(args.seed)
            counts = rng.multinomial(args.shots, p / p.sum()).reshape(joint.shape)
            detected = counts[tuple(slice(0, m) for m in sc.outcomes)]
            doc = document((sc, detected), kind="counts")
    doc = dict(doc, generator=_report(args, {}))
    if args.out:
        write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=1, default=_default)
        sys.stdout.write("\n")
    return 0


def _scenario(args) -> Scenario:
    if len(args.inputs) != len(args.outcomes):
        raise ShapeError("--inputs and --outcomes need one value per party")
    return Scenario(tuple(args.inputs), tuple(args.outcomes))


def cmd_vertices(args) -> int:
    sc = _scenario(args)
    if args.mdl:
        vs = enumerate_mdl_vertices(sc, MdlBounds(*args.mdl), max_vertices=args.max_vertices)
    else:
        vs = enumerate_ldl_vertices(sc, DetectionBounds(args.eta_min, args.eta_max, args.convention),
                                    max_vertices=args.max_vertices)
    _emit(args, _report(args, vs.to_dict()))
    print(f"{len(vs)} vertices")
    return 0


def cmd_bridge(args) -> int:
    p = BridgeParams(MdlBounds(args.ell, args.h), DetectionBounds(args.eta_min, args.eta_max, args.convention))
    sc = Scenario(tuple(args.inputs), tuple(args.outcomes))
    threads = _threads(args)
    rep = verify_bridge(args.trials, args.seed, sc, p, support=args.support, threads=threads)
    _emit(args, _report(args, dict(rep, threads=threads)))
    t = rep["transformed"]
    print(f"transformed bounds ell'={t['ell']:.6g} h'={t['h']:.6g}" + (" (clamped)" if t["clamped"] else ""))
    print(f"{rep['trials']} trials, {rep['failures']} failures, min slack {rep['min_slack']:.3g}")
    return 0 if rep["failures"] == 0 else 1


def cmd_strategy(args) -> int:
    kind, obj = _load(args.input, args)
    b, _ = _as_behavior(obj)
    local = []
    for path in (args.local_a, args.local_b):
        if path is None:
            local.append(None)
            continue
        try:
            local.append(np.asarray(read_json(path)["table"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: expected {{\"table\": [[P(a|x) ...], ...]}}") from exc
    out = assignment_mix(b, args.eta, args.eta_min_target, *local)
    doc = dict(document(out), generator=_report(args, {}))
    if args.out:
        write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=1, default=_default)
        sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldlcert", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ldlcert {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_help="write the JSON report here"):
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("analyze", help="Hardy-type thresholds of counts or probabilities")
    p.add_argument("input")
    p.add_argument("--eta-max", type=float, nargs="+", default=[0.5, 0.1])
    p.add_argument("--convention", choices=CONVENTIONS, default="per-party")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--errors", choices=("delta", "bootstrap", "none"), default="delta")
    p.add_argument("--estimator", choices=("multinomial", "bootstrap"), default="multinomial")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("membership", help="polytope membership with a certificate")
    p.add_argument("input")
    p.add_argument("--eta-min", type=_number)
    p.add_argument("--eta-max", type=_number)
    p.add_argument("--convention", choices=CONVENTIONS, default="per-party")
    p.add_argument("--efficiencies", default=UNIFORM_UNKNOWN,
                   help="'uniform-unknown', 'observed' (lossy input) or a JSON file")
    p.add_argument("--mdl", type=_number, nargs=2, metavar=("L", "H"),
                   help="test measurement-dependent locality instead")
    p.add_argument("--mode", choices=("float", "exact"), default="float")
    p.add_argument("--estimator", choices=("multinomial", "bootstrap"), default="multinomial")
    common(p)
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("quantum", help="ideal Hardy data, optionally lossy or sampled")
    p.add_argument("--emit", choices=("behavior", "counts"), default="behavior")
    p.add_argument("--shots", type=int)
    p.add_argument("--loss", type=float, nargs=2, metavar=("ETA_A", "ETA_B"),
                   help="per-party detection efficiencies")
    common(p, "write the file here (default stdout)")
    p.set_defaults(func=cmd_quantum)

    p = sub.add_parser("vertices", help="dump polytope vertices")
    p.add_argument("--inputs", type=int, nargs="+", default=[2, 2])
    p.add_argument("--outcomes", type=int, nargs="+", default=[2, 2])
    p.add_argument("--eta-min", type=_number, default=Fraction(1))
    p.add_argument("--eta-max", type=_number, default=Fraction(1))
    p.add_argument("--convention", choices=CONVENTIONS, default="per-party")
    p.add_argument("--mdl", type=_number, nargs=2, metavar=("L", "H"))
    p.add_argument("--max-vertices", type=int, default=10**6)
    common(p)
    p.set_defaults(func=cmd_vertices)

    p = sub.add_parser("bridge", help="randomized check of the detection-to-measurement-dependence reduction")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--convention", choices=CONVENTIONS, default="joint")
    p.add_argument("--eta-min", type=float, default=0.6)
    p.add_argument("--eta-max", type=float, default=0.9)
    p.add_argument("--ell", type=float, default=0.2)
    p.add_argument("--h", type=float, default=0.3)
    p.add_argument("--support", type=int, default=8)
    p.add_argument("--inputs", type=int, nargs=2, default=[2, 2])
    p.add_argument("--outcomes", type=int, nargs=2, default=[2, 2])
    p.add_argument("--threads", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser("strategy", help="partially assign non-detections to local outcomes")
    p.add_argument("input")
    p.add_argument("--eta", type=_number, required=True)
    p.add_argument("--eta-min-target", type=_number, required=True)
    p.add_argument("--local-a", help="JSON file {\"table\": P(a|x)} for party A")
    p.add_argument("--local-b", help="JSON file {\"table\": P(b|y)} for party B")
    common(p, "write the behavior here (default stdout)")
    p.set_defaults(func=cmd_strategy)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ShapeError, TooLarge, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Unsolved as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except LdlcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
