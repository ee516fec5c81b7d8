"""Config-driven runs: load data, release, audit, write a deterministic report."""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..attacks import SubsetQueryFamily, reconstruct, separation_experiment, separation_modulus
from ..core import Database, ExplicitClass, HalfspaceClass, IntervalClass, Universe, find_shattered_set, vc_dimension
from ..errors import InvalidInputError, NumericError, PrivReleaseError
from ..halfspaces import HalfspaceParams, PointCloud, release_halfspaces
from ..intervals import IntervalParams, PointDatabase, interval_utility_min_n, release_intervals
from ..netmech import Net, net_database_size, net_mechanism, required_alpha
from ..noise import BudgetLedger, laplace_answer
from ..rng import make_rng
from . import io
from .audit import HALFSPACE_AUDIT_QUERIES, empirical_usefulness, exact_dp_audit

MECHANISMS = ("net", "intervals", "halfspaces")


@dataclass
class ExperimentConfig:
    mechanism: str
    dataset: str | None
    queries: str | None
    seed: int
    epsilon: float = 1.0
    alpha: float | None = None
    delta: float | None = None
    gamma: float | None = None
    beta: float | None = None
    d: int | None = None
    trials: int = 0
    override_T: int | None = None
    override_grid_step: float | None = None
    override_m: int | None = None
    output: str | None = None
    release_output: str | None = None
    halfspace_audit_queries: int = HALFSPACE_AUDIT_QUERIES

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise InvalidInputError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if self.trials < 0:
            raise InvalidInputError("trials must be >= 0")


@contextlib.contextmanager
def stage(name: str):
    """Re-raise package errors with the failing stage named."""
    try:
        yield
    except PrivReleaseError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except ArithmeticError as exc:
        raise NumericError(f"[{name}] {exc}") from exc


def _load_discrete(path, qclass: ExplicitClass) -> Database:
    records = io.read_discrete_dataset(path)
    universe = Universe.range(qclass.universe_size)
    bad = [r for r in records if not 0 <= r < len(universe)]
    if bad:
        raise InvalidInputError(f"{path}: element id {bad[0]} outside universe of size {len(universe)}")
    return Database.from_indices(universe, records)


def _net_runner(cfg: ExperimentConfig, db: Database, qclass: ExplicitClass):
    if cfg.override_m is not None:
        m = cfg.override_m
    elif cfg.alpha is not None:
        m = net_database_size(max(len(qclass), 2), cfg.alpha)
    else:
        raise InvalidInputError("net mechanism needs --alpha or --override-m")
    net = Net.build(db.universe, qclass, m)
    params = {"epsilon": cfg.epsilon, "alpha": cfg.alpha, "m": m, "net_size": len(net),
              "m_overridden": cfg.override_m is not None, "score_sensitivity": 1 / db.n}
    if cfg.delta is not None:
        params["required_alpha"] = required_alpha(1 / db.n, cfg.epsilon, len(net), cfg.delta)

    def run(data, rng):
        return net_mechanism(data, qclass, cfg.epsilon, cfg.alpha, rng, net=net)

    def describe(res):
        ledger = BudgetLedger()
        ledger.spend("net_mechanism", cfg.epsilon)
        return {
            "synthetic_records": list(res.synthetic.records),
            "candidate_index": res.index,
            "achieved_error_nonprivate": res.achieved_error,
        }, ledger

    return run, describe, params


def _interval_runner(cfg: ExperimentConfig, db: PointDatabase):
    if cfg.alpha is None:
        raise InvalidInputError("interval release needs --alpha")
    p = IntervalParams(cfg.alpha, cfg.epsilon, db.d)
    params = {"epsilon": cfg.epsilon, "alpha": cfg.alpha, "d": db.d, "alpha_cell": p.alpha_cell,
              "max_intervals": p.max_intervals, "epsilon_per_call": str(p.epsilon_call),
              "points_per_cell": p.points_per_cell}
    if cfg.delta is not None:
        params["theory_min_n"] = interval_utility_min_n(db.d, cfg.epsilon, cfg.alpha, cfg.delta)

    def run(data, rng):
        return release_intervals(data, cfg.alpha, cfg.epsilon, rng)

    def describe(res):
        return {
            "bounds": res.bounds,
            "synthetic_points": res.synthetic.points.tolist(),
            "laplace_calls": res.laplace_calls,
            "overran_max_intervals": res.overran,
        }, res.ledger

    return run, describe, params


def _halfspace_runner(cfg: ExperimentConfig, cloud: PointCloud, qclass: HalfspaceClass | None):
    gamma = cfg.gamma if cfg.gamma is not None else (qclass.gamma if qclass else None)
    if gamma is None or cfg.alpha is None or cfg.beta is None:
        raise InvalidInputError("halfspace release needs gamma, alpha and beta")
    hp = HalfspaceParams(
        d=cloud.d, gamma=gamma, alpha=cfg.alpha, beta=cfg.beta, epsilon=cfg.epsilon,
        T_override=cfg.override_T, grid_step_override=cfg.override_grid_step, m_override=cfg.override_m,
    )

    def run(data, rng):
        return release_halfspaces(data, hp, rng, seed=cfg.seed)

    def describe(res):
        return {"structure": res}, res.ledger

    return run, describe, hp.report()


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Release once with stream (seed, 0); audit over ``trials`` further streams when asked.

    Returns the report document (also written to ``cfg.output`` when set).
    """
    with stage("ingest"):
        qclass = io.read_query_spec(cfg.queries) if cfg.queries else None
        if cfg.dataset is None:
            raise InvalidInputError("a dataset path is required")
        if cfg.mechanism == "net":
            if not isinstance(qclass, ExplicitClass):
                raise InvalidInputError("net mechanism needs an explicit query class")
            data = _load_discrete(cfg.dataset, qclass)
        elif cfg.mechanism == "intervals":
            d = cfg.d if cfg.d is not None else (qclass.d if isinstance(qclass, IntervalClass) else None)
            if d is None:
                raise InvalidInputError("interval release needs d (from --queries or the config)")
            if qclass is None:
                qclass = IntervalClass(d)
            data = PointDatabase(d, io.read_discrete_dataset(cfg.dataset))
        else:
            if qclass is not None and not isinstance(qclass, HalfspaceClass):
                raise InvalidInputError("halfspace release needs a halfspace query class")
            data = PointCloud(io.read_point_cloud(cfg.dataset))
            if qclass is not None and qclass.d != data.d:
                raise InvalidInputError(f"query class d={qclass.d} but points have {data.d} coordinates")

    with stage("params"):
        if cfg.mechanism == "net":
            run, describe, params = _net_runner(cfg, data, qclass)
        elif cfg.mechanism == "intervals":
            run, describe, params = _interval_runner(cfg, data)
        else:
            run, describe, params = _halfspace_runner(cfg, data, qclass)
            if qclass is None:
                qclass = HalfspaceClass(data.d, params["gamma"])

    with stage("release"):
        result = run(data, make_rng(cfg.seed, 0))
        release, ledger = describe(result)
    if ledger.total > Fraction(cfg.epsilon):
        raise InvalidInputError(f"ledger total {ledger.total} exceeds the configured epsilon {cfg.epsilon}")

    report = {
        "command": f"release-{cfg.mechanism}" if cfg.mechanism != "net" else "release-net",
        "mechanism": cfg.mechanism,
        "seed": cfg.seed,
        "n": int(getattr(data, "n")),
        "params": params,
        "ledger": ledger.to_dict(),
        "query_class": io.query_spec(qclass),
    }
    structure = release.pop("structure", None)
    if structure is not None:
        target = cfg.release_output or (str(Path(cfg.output).with_suffix(".structure.json")) if cfg.output else None)
        report["release"] = {"structure_file": target, "dims": structure.to_dict()["dims"]}
        with stage("write"):
            if target:
                io.atomic_write(target, structure.dumps())
    else:
        report["release"] = release

    if cfg.trials:
        with stage("audit"):
            if cfg.alpha is None:
                raise InvalidInputError("usefulness audit needs --alpha")
            usefulness = empirical_usefulness(
                run, data, qclass, cfg.alpha, cfg.trials, cfg.seed,
                halfspace_queries=cfg.halfspace_audit_queries,
            )
            report["usefulness"] = usefulness.to_dict()

    with stage("write"):
        io.write_report(cfg.output, report)
    return {"schema_version": io.REPORT_SCHEMA_VERSION, **report}


def run_laplace_answer(dataset, queries, query_index: int, epsilon: float, seed: int) -> dict:
    with stage("ingest"):
        qclass = io.read_query_spec(queries)
        if not isinstance(qclass, ExplicitClass):
            raise InvalidInputError("laplace-answer needs an explicit query class")
        if not 0 <= query_index < len(qclass):
            raise InvalidInputError(f"query index {query_index} outside class of size {len(qclass)}")
        db = _load_discrete(dataset, qclass)
    ledger = BudgetLedger()
    with stage("release"):
        value = laplace_answer(qclass[query_index], db, epsilon, ledger, make_rng(seed, 0))
    return {"command": "laplace-answer", "seed": seed, "n": db.n, "query_index": query_index,
            "params": {"epsilon": epsilon, "noise_scale": 1 / (epsilon * db.n)},
            "answer": value, "ledger": ledger.to_dict()}


def run_dp_audit(universe_size: int, n: int, queries, epsilon: float, m: int) -> dict:
    with stage("params"):
        qclass = io.read_query_spec(queries) if queries else ExplicitClass.all_predicates(universe_size)
        if not isinstance(qclass, ExplicitClass) or qclass.universe_size != universe_size:
            raise InvalidInputError("audit needs an explicit class over the stated universe")
    with stage("audit"):
        res = exact_dp_audit("net", Universe.range(universe_size), n, qclass, epsilon, m=m)
    return {"command": "audit-dp", "universe_size": universe_size, "n": n, "m": m,
            "class_size": len(qclass), "audit": res.to_dict()}


def run_vc_dim(queries) -> dict:
    with stage("ingest"):
        qclass = io.read_query_spec(queries)
        if not isinstance(qclass, ExplicitClass):
            raise InvalidInputError("vc-dim needs an explicit query class")
    with stage("compute"):
        k = vc_dimension(qclass)
        s = find_shattered_set(qclass, None, k)
    return {"command": "vc-dim", "class_size": len(qclass), "universe_size": qclass.universe_size,
            "vc_dimension": k, "shattered_set": list(s)}


def run_reconstruction(d: int, perturbation: float, seed: int, queries=None, target=None) -> dict:
    """Reconstruct a hidden half-size subset from answers perturbed adversarially by +-perturbation."""
    with stage("params"):
        if queries:
            qclass = io.read_query_spec(queries)
            if not isinstance(qclass, ExplicitClass):
                raise InvalidInputError("attack needs an explicit query class")
            family = SubsetQueryFamily.from_class(qclass, Universe.range(qclass.universe_size), d)
        else:
            family = SubsetQueryFamily.on_set(d)
        if perturbation < 0:
            raise InvalidInputError("perturbation must be non-negative")
    rng = make_rng(seed, 0)
    if target is None:
        target = family.members[int(rng.integers(len(family.members)))]
    target = family._check_member(target)
    with stage("attack"):
        exact = family.answers(family.database(target))
        # the adversary lowers the answer on the true target and raises it elsewhere
        signs = rng.choice([-1.0, 1.0], size=len(family.members))
        noisy = {
            t: float(exact[t]) + (-perturbation if t == target else s * perturbation)
            for t, s in zip(family.members, signs)
        }
        res = reconstruct(noisy, d, target)
    return {"command": "attack-reconstruct", "seed": seed, "d": d, "perturbation": perturbation,
            "shattered_set": list(family.shattered), "target": list(target),
            "recovered": list(res.recovered), "symdiff": res.symdiff, "bound": 2 * d * perturbation,
            "within_bound": res.symdiff <= 2 * d * perturbation + 1e-12}


def run_separation(n: int, epsilon: float, trials: int, seed: int) -> dict:
    with stage("experiment"):
        freq = separation_experiment(n, epsilon, trials, make_rng(seed, 0))
    se = math.sqrt(freq * (1 - freq) / trials)
    return {"command": "separation-demo", "seed": seed, "n": n, "epsilon": epsilon, "trials": trials,
            "modulus": separation_modulus(epsilon), "threshold": 1 / epsilon,
            "frequency": freq, "std_error": se}
