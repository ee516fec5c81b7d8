"""Interval release utility as the database grows.

Runs the release on the three-cluster database at several sizes and prints
the fraction of trials whose max interval error is within alpha.
"""

import argparse

import numpy as np

from privrelease.intervals import PointDatabase, interval_utility_min_n, max_interval_error, release_intervals
from privrelease.rng import make_rng


def cluster_database(n: int, d: int) -> PointDatabase:
    top = 2**d
    starts = [int(top * f) for f in (0.12, 0.47, 0.84)]
    blocks = [np.arange(s, s + 6) for s in starts]
    sizes = [n // 3 + (1 if j < n % 3 else 0) for j in range(3)]
    return PointDatabase(d, np.concatenate([np.resize(b, s) for b, s in zip(blocks, sizes)]))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--epsilon", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--multipliers", type=float, nargs="+", default=[1, 2, 5, 10, 100])
    args = ap.parse_args()

    base = interval_utility_min_n(args.d, args.epsilon, args.alpha, args.delta)
    print(f"theory n = {base}")
    print(f"{'n':>9} {'within alpha':>13} {'median err':>11}")
    for mult in args.multipliers:
        n = int(base * mult)
        db = cluster_database(n, args.d)
        errs = [max_interval_error(db, release_intervals(db, args.alpha, args.epsilon, make_rng(args.seed, t)).synthetic)
                for t in range(args.trials)]
        ok = np.mean(np.array(errs) <= args.alpha)
        print(f"{n:>9} {ok:>13.2f} {np.median(errs):>11.3f}")


if __name__ == "__main__":
    main()
