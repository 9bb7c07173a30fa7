"""Rate function I(t) on [l0, ess sup) for a margin pair given on the command line.

    python3 scripts/rate_curve.py --margins spike --points 30
    python3 scripts/rate_curve.py --margins linear:1,linear:-1
"""

import argparse

import numpy as np

from indet.indettest import bahadur_slope, rate_point, setup
from indet.specs import margin_pair_from_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--margins", default="spike")
    ap.add_argument("--points", type=int, default=20)
    args = ap.parse_args()

    st = setup(*margin_pair_from_spec(args.margins))
    print(f"# l0={st.l0:.10f} l1={st.l1:.10f} eta={st.eta:.6g} slope={bahadur_slope(st):.10f}")
    print("t,I,theta")
    for t in np.linspace(st.l0, st.ess_sup, args.points + 1)[:-1]:
        p = rate_point(st, t)
        print(f"{t:.6f},{p.rate:.10f},{p.theta:.6f}")


if __name__ == "__main__":
    main()
