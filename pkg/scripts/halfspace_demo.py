"""Projected halfspace release at desk scale, with and without noise.

Prints the theory parameters, the override parameters actually used, and
the accuracy on sampled margin queries for the noisy and noiseless structure.
"""

import argparse

import numpy as np

from privrelease.halfspaces import (
    HalfspaceParams,
    PointCloud,
    evaluate_halfspace,
    halfspace_answers,
    random_unit_vectors,
    release_halfspaces,
    sample_margin_queries,
)
from privrelease.noise import zero_noise
from privrelease.rng import make_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--d", type=int, default=6)
    ap.add_argument("--T", type=int, default=6)
    ap.add_argument("--step", type=float, default=0.5)
    ap.add_argument("--m", type=int, default=200)
    ap.add_argument("--gamma", type=float, default=0.4)
    ap.add_argument("--epsilon", type=float, default=1.0)
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = make_rng(args.seed, 0)
    centres = random_unit_vectors(4, args.d, rng)
    pts = centres[rng.integers(0, 4, args.n)] + 0.05 * rng.standard_normal((args.n, args.d))
    cloud = PointCloud(pts / np.linalg.norm(pts, axis=1, keepdims=True))
    params = HalfspaceParams(args.d, args.gamma, 0.2, 0.05, args.epsilon, T_override=args.T,
                             grid_step_override=args.step, m_override=args.m)
    for k, v in params.report().items():
        print(f"{k:>24}: {v}")

    ys = sample_margin_queries(cloud, args.gamma, args.queries, make_rng(args.seed, 2))
    truth = halfspace_answers(cloud.points, ys)
    for label, noise in (("noisy", None), ("noiseless", zero_noise)):
        s = release_halfspaces(cloud, params, make_rng(args.seed, 1), noise=noise)
        err = np.abs(truth - np.array([evaluate_halfspace(s, y) for y in ys]))
        print(f"{label:>10}: |U|={len(s.net)}, noise scale {args.m * len(s.net) / (args.epsilon * args.n):.4g}, "
              f"{np.mean(err <= 0.2):.2f} within 0.2, median error {np.median(err):.3g}")


if __name__ == "__main__":
    main()
