"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 resource limit, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import InvalidInputError, NumericError, PrivReleaseError
from . import experiment, io

RANDOMIZED = {
    "release-net", "release-intervals", "release-halfspaces", "laplace-answer",
    "eval-usefulness", "attack-reconstruct", "separation-demo",
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--input")
    p.add_argument("--queries")
    p.add_argument("--output")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--override-T", dest="override_T", type=int)
    p.add_argument("--override-grid-step", type=float)
    p.add_argument("--override-m", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="privrelease", description="Private query release toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("release-net", parents=[common], help="net mechanism synthetic release")
    p = sub.add_parser("release-intervals", parents=[common], help="interval synthetic release")
    p.add_argument("--d", type=int, help="bit-depth when --queries is omitted")
    sub.add_parser("release-halfspaces", parents=[common], help="projected halfspace structure")
    p = sub.add_parser("laplace-answer", parents=[common], help="one noisy counting query")
    p.add_argument("--query-index", type=int, default=0)
    p = sub.add_parser("eval-usefulness", parents=[common], help="release plus empirical usefulness audit")
    p.add_argument("--mechanism", choices=experiment.MECHANISMS,
                   help="defaults to the mechanism matching the query class kind")
    p.add_argument("--d", type=int)
    p.add_argument("--audit-queries", type=int, default=experiment.HALFSPACE_AUDIT_QUERIES)
    p = sub.add_parser("audit-dp", parents=[common], help="exact DP audit of the net mechanism")
    p.add_argument("--universe-size", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("attack-reconstruct", parents=[common], help="reconstruction from perturbed answers")
    p.add_argument("--dim", type=int, required=True, help="size of the shattered set (even)")
    p.add_argument("--target", help="comma-separated positions in the shattered set")
    sub.add_parser("vc-dim", parents=[common], help="brute-force VC dimension of an explicit class")
    p = sub.add_parser("separation-demo", parents=[common], help="mirrored-mod separation experiment")
    p.add_argument("--n", type=int, default=100)
    return parser


_KIND_TO_MECHANISM = {"explicit": "net", "intervals": "intervals", "halfspaces": "halfspaces"}


def _config(args, mechanism: str, trials: int) -> experiment.ExperimentConfig:
    return experiment.ExperimentConfig(
        mechanism=mechanism, dataset=args.input, queries=args.queries, seed=args.seed,
        epsilon=args.epsilon, alpha=args.alpha, delta=args.delta, gamma=args.gamma, beta=args.beta,
        d=getattr(args, "d", None), trials=trials, override_T=args.override_T,
        override_grid_step=args.override_grid_step, override_m=args.override_m, output=args.output,
        halfspace_audit_queries=getattr(args, "audit_queries", experiment.HALFSPACE_AUDIT_QUERIES),
    )


def dispatch(args) -> dict:
    cmd = args.command
    if cmd in RANDOMIZED and args.seed is None:
        raise InvalidInputError(f"{cmd} is randomized and requires --seed")
    if cmd == "release-net":
        return experiment.run_experiment(_config(args, "net", args.trials))
    if cmd == "release-intervals":
        return experiment.run_experiment(_config(args, "intervals", args.trials))
    if cmd == "release-halfspaces":
        return experiment.run_experiment(_config(args, "halfspaces", args.trials))
    if cmd == "eval-usefulness":
        mechanism = args.mechanism
        if mechanism is None:
            if not args.queries:
                raise InvalidInputError("eval-usefulness needs --queries or --mechanism")
            mechanism = _KIND_TO_MECHANISM[io.query_spec(io.read_query_spec(args.queries))["kind"]]
        if args.trials < 1:
            raise InvalidInputError("eval-usefulness needs --trials >= 1")
        return experiment.run_experiment(_config(args, mechanism, args.trials))
    if cmd == "laplace-answer":
        doc = experiment.run_laplace_answer(args.input, args.queries, args.query_index, args.epsilon, args.seed)
    elif cmd == "audit-dp":
        if args.override_m is None:
            raise InvalidInputError("audit-dp needs --override-m (net database size)")
        doc = experiment.run_dp_audit(args.universe_size, args.n, args.queries, args.epsilon, args.override_m)
    elif cmd == "attack-reconstruct":
        target = None if args.target is None else tuple(int(t) for t in args.target.split(","))
        doc = experiment.run_reconstruction(args.dim, args.alpha or 0.0, args.seed, args.queries, target)
    elif cmd == "vc-dim":
        doc = experiment.run_vc_dim(args.queries)
    elif cmd == "separation-demo":
        doc = experiment.run_separation(args.n, args.epsilon, args.trials or 10_000, args.seed)
    else:  # pragma: no cover - argparse rejects unknown commands
        raise InvalidInputError(f"unknown command {cmd}")
    text = io.write_report(args.output, doc)
    return {"schema_version": io.REPORT_SCHEMA_VERSION, **doc, "_text": text}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        doc = dispatch(args)
    except PrivReleaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NumericError.exit_code
    if args.output is None:
        text = doc.pop("_text", None) or io.dumps(doc)
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
