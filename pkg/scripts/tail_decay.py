"""Finite-n tail of the test statistic under H0 against the Chernoff bound.

On the spike margins the statistic is an average of atoms 1.5 and 9, so the
exact tail is a binomial sum.  The script prints the Monte Carlo estimate,
the exact value, exp(-n I(t)) and the empirical rate -(1/n) log P.

    python3 scripts/tail_decay.py --t 3.5 --ns 25 50 100 200 400 --reps 100000
"""

import argparse
import math
import os

from scipy import stats

from indet.indettest import rate_function, setup, simulate_statistic, tail_from_draws
from indet.margins import spike_pair
from indet.numerics import RngStream


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, default=3.5)
    ap.add_argument("--ns", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    st = setup(*spike_pair())
    rate = rate_function(st, args.t)
    stream = RngStream(args.seed)
    print(f"# t={args.t} I(t)={rate:.8f}")
    print("n,p_hat,stderr,exact,chernoff,empirical_rate")
    for i, n in enumerate(args.ns):
        draws = simulate_statistic(st, n, args.reps, stream.child(i), workers=args.workers)
        est = tail_from_draws(draws, args.t)
        k = math.ceil((args.t - 1.5) * n / 7.5 - 1e-9)
        exact = stats.binom.sf(k - 1, n, 0.2)
        emp = -math.log(exact) / n if exact > 0 else math.inf
        print(f"{n},{est.p_hat:.6g},{est.stderr:.2g},{exact:.6g},{math.exp(-n * rate):.6g},{emp:.6f}")


if __name__ == "__main__":
    main()
