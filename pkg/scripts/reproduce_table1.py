"""Hardy-type thresholds of the published photon-pair data, with delta and bootstrap errors."""

import argparse
import json

from ldlcert.analysis import analyze
from ldlcert.fileio import table1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-max", type=float, nargs="+", default=[0.5, 0.1])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    j = table1()
    out = {m: analyze(j, args.eta_max, errors=m, seed=args.seed) for m in ("delta", "bootstrap")}
    rep = out["delta"]
    print(f"critical ratio      {rep['critical_ratio']:.5f} +- {rep['errors']['critical_ratio']:.5f} (delta), "
          f"+- {out['bootstrap']['errors']['critical_ratio']:.5f} (bootstrap)")
    for k, v in rep["required_eta_min"].items():
        print(f"eta_min at eta_max={k:<4} {v:.5f} +- {rep['errors']['required_eta_min'][k]:.5f}")
    print(f"combined threshold  {rep['mdl_ldl_threshold']:.5f} +- {rep['errors']['mdl_ldl_threshold']:.5f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=1)


if __name__ == "__main__":
    main()
