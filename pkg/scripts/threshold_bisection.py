"""Locate the eta_min/eta_max ratio where the measured data stop being limited-detection local.

Bisects with float solves, then re-certifies both bracket ends in exact
arithmetic on the printed decimals, and compares with the closed-form Hardy
threshold.
"""

import argparse
import itertools
import json
import time

from ldlcert.analysis import critical_ratio, extract_hardy_terms
from ldlcert.correlations import condition_on_inputs
from ldlcert.fileio import table1
from ldlcert.ldl import locate_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--out")
    args = ap.parse_args()
    j = table1()
    b, _ = condition_on_inputs(j)
    eb, _ = condition_on_inputs(table1(exact=True))
    t0 = time.time()
    res = locate_threshold(b, tol=args.tol, exact_behavior=eb)
    closed = critical_ratio(extract_hardy_terms(j))
    if res["bracket"] is None:
        print("member for every ratio")
        return
    lo, hi = res["bracket"]
    above = res["above"]
    print(f"membership flips between {float(lo):.5f} ({res['below'].status}) and {float(hi):.5f} ({above.status})")
    print(f"closed-form Hardy threshold {closed:.5f}")
    report = {
        "bracket": [str(lo), str(hi)],
        "below": res["below"].status,
        "above": above.status,
        "closed_form_ratio": closed,
        "seconds": time.time() - t0,
    }
    if not above.feasible:
        ineq = above.meta["inequality"]
        scale = max(abs(float(v)) for v in ineq["coefficients"].ravel())
        terms = {f"P({a}{b}|{x}{y})": round(float(v) / scale, 6)
                 for (a, b, x, y), v in zip(itertools.product(range(2), repeat=4), ineq["coefficients"].ravel()) if v != 0}
        print("separating inequality above the flip:", " ".join(f"{c:+g} {k}" for k, c in terms.items()),
              f"<= {float(ineq['bound']) / scale:g}")
        report["inequality_above"] = terms
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1)


if __name__ == "__main__":
    main()
