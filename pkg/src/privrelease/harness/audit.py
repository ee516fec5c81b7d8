"""Empirical usefulness and exact differential-privacy audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from ..core import Database, ExplicitClass, HalfspaceClass, IntervalClass, Universe, max_class_error
from ..errors import InvalidInputError, ResourceLimitError
from ..expmech import exp_mech_log_distribution
from ..halfspaces import (
    PointCloud,
    ProjectedHalfspaceStructure,
    evaluate_halfspace,
    halfspace_answers,
    sample_margin_queries,
)
from ..intervals import PointDatabase, max_interval_error
from ..netmech import Net, net_histograms, net_size
from ..rng import make_rng

AUDIT_MAX_DATABASES = 20_000
AUDIT_MAX_NET = 100_000
HALFSPACE_AUDIT_QUERIES = 1000


def clopper_pearson(failures: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for a failure rate."""
    if trials < 1 or not 0 <= failures <= trials:
        raise InvalidInputError("need 0 <= failures <= trials and trials >= 1")
    tail = (1 - level) / 2
    lo = 0.0 if failures == 0 else float(stats.beta.ppf(tail, failures, trials - failures + 1))
    hi = 1.0 if failures == trials else float(stats.beta.ppf(1 - tail, failures + 1, trials - failures))
    return lo, hi


@dataclass
class UsefulnessResult:
    alpha: float
    trials: int
    errors: list[float]
    failures: int = field(init=False)
    delta_hat: float = field(init=False)
    ci: tuple[float, float] = field(init=False)

    def __post_init__(self):
        self.failures = sum(e > self.alpha for e in self.errors)
        self.delta_hat = self.failures / self.trials
        self.ci = clopper_pearson(self.failures, self.trials)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "trials": self.trials,
            "failures": self.failures,
            "delta_hat": self.delta_hat,
            "ci95": list(self.ci),
            "errors": self.errors,
        }


def halfspace_release_error(cloud: PointCloud, structure: ProjectedHalfspaceStructure, queries: np.ndarray) -> float:
    """Max over the sampled queries of |f_y(cloud) - f_y(structure)|."""
    truth = halfspace_answers(cloud.points, queries)
    est = np.array([evaluate_halfspace(structure, y) for y in queries])
    return float(np.abs(truth - est).max())


def error_oracle(db, qclass, release, *, queries: np.ndarray | None = None) -> float:
    """Non-private max error of ``release`` against ``db`` over the class."""
    if isinstance(qclass, ExplicitClass):
        if not isinstance(db, Database) or not isinstance(release, Database):
            raise InvalidInputError("explicit classes are audited on discrete databases")
        return max_class_error(qclass, db, release)
    if isinstance(qclass, IntervalClass):
        if not isinstance(db, PointDatabase) or not isinstance(release, PointDatabase):
            raise InvalidInputError("interval classes are audited on point databases")
        return max_interval_error(db, release)
    if isinstance(qclass, HalfspaceClass):
        if not isinstance(db, PointCloud) or not isinstance(release, ProjectedHalfspaceStructure):
            raise InvalidInputError("halfspace classes are audited on point clouds and projected structures")
        if queries is None:
            raise InvalidInputError("halfspace audits need sampled margin queries")
        return halfspace_release_error(db, release, queries)
    raise InvalidInputError(f"unsupported query class {qclass!r}")


def empirical_usefulness(
    mechanism: Callable,
    db,
    qclass,
    alpha: float,
    trials: int,
    seed: int,
    *,
    halfspace_queries: int = HALFSPACE_AUDIT_QUERIES,
) -> UsefulnessResult:
    """Run ``mechanism(db, rng)`` on per-trial streams (seed, trial) and count errors above alpha.

    The mechanism may return the release directly or an object with a
    ``synthetic`` attribute.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    queries = None
    if isinstance(qclass, HalfspaceClass):
        if not isinstance(db, PointCloud):
            raise InvalidInputError("halfspace classes are audited on point clouds")
        # stream 2**63 is reserved for the audit's query sample
        queries = sample_margin_queries(db, qclass.gamma, halfspace_queries, make_rng(seed, 2**63))
    errors = []
    for t in range(trials):
        out = mechanism(db, make_rng(seed, t))
        release = getattr(out, "synthetic", out)
        errors.append(error_oracle(db, qclass, release, queries=queries))
    return UsefulnessResult(alpha, trials, errors)


@dataclass
class DPAuditResult:
    epsilon: float
    max_log_ratio: float
    databases: int
    neighbor_pairs: int
    net_size: int
    worst_pair: tuple

    @property
    def passed(self) -> bool:
        return self.max_log_ratio <= self.epsilon + 1e-9

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "max_log_ratio": self.max_log_ratio,
            "passed": self.passed,
            "databases": self.databases,
            "neighbor_pairs": self.neighbor_pairs,
            "net_size": self.net_size,
            "worst_pair": [list(self.worst_pair[0]), list(self.worst_pair[1])],
        }


def neighbor_pairs(histograms: np.ndarray) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, of same-size multisets differing in one record."""
    index = {row.tobytes(): i for i, row in enumerate(histograms)}
    pairs = set()
    k = histograms.shape[1]
    for i, row in enumerate(histograms):
        for src in np.flatnonzero(row):
            for dst in range(k):
                if dst == src:
                    continue
                nb = row.copy()
                nb[src] -= 1
                nb[dst] += 1
                j = index[nb.tobytes()]
                pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def exact_dp_audit(
    mechanism: str,
    universe: Universe,
    n: int,
    qclass: ExplicitClass,
    epsilon: float,
    *,
    m: int,
) -> DPAuditResult:
    """Exhaustive max |ln p(D) - ln p(D')| over neighbours D, D' of size n and every net output."""
    if mechanism != "net":
        raise InvalidInputError(f"exact audits need a finite, exactly computable output; {mechanism!r} has none")
    if not isinstance(qclass, ExplicitClass):
        raise InvalidInputError("exact audits need an explicit query class")
    dbs = net_size(len(universe), n)
    if dbs > AUDIT_MAX_DATABASES:
        raise ResourceLimitError(f"{dbs} databases of size {n} exceed the audit guard ({AUDIT_MAX_DATABASES})")
    if net_size(len(universe), m) > AUDIT_MAX_NET:
        raise ResourceLimitError(f"net size exceeds the audit guard ({AUDIT_MAX_NET})")
    net = Net.build(universe, qclass, m)
    hists = net_histograms(len(universe), n)
    logp = np.stack([
        exp_mech_log_distribution(-net.errors(qclass, Database(universe, h)), epsilon, 1.0 / n) for h in hists
    ])
    pairs = neighbor_pairs(hists)
    worst, worst_pair = 0.0, (tuple(hists[0]), tuple(hists[0]))
    for i, j in pairs:
        r = float(np.abs(logp[i] - logp[j]).max())
        if r > worst:
            worst, worst_pair = r, (tuple(hists[i]), tuple(hists[j]))
    if not math.isfinite(worst):
        raise ArithmeticError("non-finite log-probability in exact audit")
    return DPAuditResult(epsilon, worst, len(hists), len(pairs), len(net), worst_pair)
