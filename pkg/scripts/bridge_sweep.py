"""Randomized bridge check over a grid of detection ratios and measurement-dependence bounds."""

import argparse
import itertools
import json

from ldlcert.bridge import BridgeParams, transform, verify_bridge
from ldlcert.correlations import Scenario
from ldlcert.ldl import DetectionBounds
from ldlcert.mdl import MdlBounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = []
    grid = itertools.product(("per-party", "joint"), (0.3, 0.6, 0.9), ((0.2, 0.3), (0.1, 0.5), (0.25, 0.25)))
    for convention, eta_min, (ell, h) in grid:
        p = BridgeParams(MdlBounds(ell, h), DetectionBounds(eta_min, 0.9 if eta_min < 0.9 else 1.0, convention))
        t = transform(p)
        rep = verify_bridge(args.trials, args.seed, Scenario.binary(), p, threads=args.threads)
        rows.append({"convention": convention, "eta": [p.detection.eta_min, p.detection.eta_max], "mdl": [ell, h],
                     "transformed": t.to_dict(), "failures": rep["failures"], "min_slack": rep["min_slack"]})
        print(f"{convention:9} eta=[{p.detection.eta_min}, {p.detection.eta_max}] (l,h)=({ell}, {h}) -> "
              f"({float(t.ell):.4f}, {float(t.h):.4f}){' clamped' if t.clamped else ''}: "
              f"{rep['failures']}/{args.trials} failures, min slack {rep['min_slack']:.2e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
