"""Net enumeration and the net mechanism for finite classes of counting queries.

The candidate range is every multiset of ``m`` universe elements. Counting
queries ignore record order, so multisets lose nothing relative to ordered
tuples and the range shrinks from |X|**m to C(|X|+m-1, m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterator

import numpy as np

from .core import Database, ExplicitClass, Universe, max_class_error
from .errors import InvalidInputError, ResourceLimitError
from .expmech import exp_mech_distribution, sample_index

NET_CAP = 5_000_000


def net_database_size(class_size: int, alpha: float) -> int:
    """Records per net candidate: ceil(ln(2|C|) / (2 alpha^2)).

    With this m the union bound 2|C| exp(-2 m alpha^2) is at most 1, so a
    random subsample of that size is within alpha on every query with
    positive probability.
    """
    if class_size < 2:
        raise InvalidInputError("class size must be >= 2")
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    return max(1, math.ceil(math.log(2 * class_size) / (2 * alpha**2)))


def net_size(universe_size: int, m: int) -> int:
    return math.comb(universe_size + m - 1, m)


def _check_net(universe_size: int, m: int, cap: int) -> int:
    if m < 1:
        raise InvalidInputError("net database size m must be >= 1")
    count = net_size(universe_size, m)
    if count > cap:
        raise ResourceLimitError(
            f"net over |X|={universe_size}, m={m} has {count} candidates, above the cap of {cap}"
        )
    return count


def enumerate_net(universe: Universe, m: int, cap: int = NET_CAP) -> Iterator[tuple[int, ...]]:
    """Every size-m multiset over the universe, as sorted index tuples, in lexicographic order."""
    _check_net(len(universe), m, cap)
    return combinations_with_replacement(range(len(universe)), m)


def net_histograms(universe_size: int, m: int, cap: int = NET_CAP) -> np.ndarray:
    """(N, |X|) count matrix of the net, rows in ``enumerate_net`` order."""
    count = _check_net(universe_size, m, cap)
    flat = np.fromiter(
        (i for combo in combinations_with_replacement(range(universe_size), m) for i in combo),
        dtype=np.int64,
        count=count * m,
    ).reshape(count, m)
    hist = np.zeros((count, universe_size), dtype=np.int64)
    rows = np.repeat(np.arange(count), m)
    np.add.at(hist, (rows, flat.ravel()), 1)
    return hist


@dataclass(frozen=True)
class Net:
    """Enumerated candidates with their exact answer numerators on a class."""

    universe: Universe
    m: int
    histograms: np.ndarray
    numerators: np.ndarray  # (N, |C|) satisfying-record counts

    @classmethod
    def build(cls, universe: Universe, qclass: ExplicitClass, m: int, cap: int = NET_CAP) -> "Net":
        if qclass.universe_size != len(universe):
            raise InvalidInputError("query class and universe sizes differ")
        hist = net_histograms(len(universe), m, cap)
        return cls(universe, m, hist, hist @ qclass.matrix.T.astype(np.int64))

    def __len__(self) -> int:
        return self.histograms.shape[0]

    def candidate(self, index: int) -> Database:
        return Database(self.universe, self.histograms[index])

    def errors(self, qclass: ExplicitClass, db: Database) -> np.ndarray:
        """max_class_error(db, candidate) for every candidate, vectorised."""
        if db.universe != self.universe:
            raise InvalidInputError("database and net are over different universes")
        db_num = qclass.matrix.astype(np.int64) @ db.counts
        diff = np.abs(self.numerators * db.n - db_num[None, :] * self.m)
        return diff.max(axis=1) / (db.n * self.m)


@dataclass
class NetMechanismResult:
    synthetic: Database
    index: int
    achieved_error: float  # non-private telemetry; never used to accept or reject
    net_size: int
    m: int
    exact_output_distribution: np.ndarray | None = None


def net_mechanism(
    db: Database,
    qclass: ExplicitClass,
    epsilon: float,
    alpha: float | None,
    rng: np.random.Generator,
    *,
    m: int | None = None,
    want_exact_distribution: bool = False,
    net: Net | None = None,
    cap: int = NET_CAP,
) -> NetMechanismResult:
    """Sample a synthetic database from the net with quality -max_class_error.

    ``m`` defaults to ``net_database_size(|C|, alpha)``. A prebuilt ``net``
    may be passed to amortise enumeration across calls.
    """
    if db.n == 0:
        raise InvalidInputError("database is empty")
    if len(qclass) == 0:
        raise InvalidInputError("query class is empty")
    if net is None:
        if m is None:
            if alpha is None:
                raise InvalidInputError("either alpha or m must be given")
            m = net_database_size(max(len(qclass), 2), alpha)
        net = Net.build(db.universe, qclass, m, cap)
    scores = -net.errors(qclass, db)
    probs = exp_mech_distribution(scores, epsilon, 1.0 / db.n)
    idx = sample_index(probs, rng)
    return NetMechanismResult(
        synthetic=net.candidate(idx),
        index=idx,
        achieved_error=float(-scores[idx]),
        net_size=len(net),
        m=net.m,
        exact_output_distribution=probs if want_exact_distribution else None,
    )


def net_output_distribution(db: Database, qclass: ExplicitClass, epsilon: float, net: Net) -> np.ndarray:
    return exp_mech_distribution(-net.errors(qclass, db), epsilon, 1.0 / db.n)


def required_alpha(sensitivity: float, epsilon: float, net_size: int, delta: float) -> float:
    """Smallest alpha for which the net mechanism is (2 alpha, delta)-useful."""
    if sensitivity <= 0 or epsilon <= 0 or net_size <= 0 or not 0 < delta <= 1:
        raise InvalidInputError("sensitivity, epsilon, net size and delta must be positive, delta <= 1")
    return (2 * sensitivity / epsilon) * math.log(net_size / delta)


def failure_mass(probabilities: np.ndarray, errors: np.ndarray, threshold: float) -> float:
    """Exact probability that the output's error exceeds ``threshold``."""
    return float(probabilities[errors > threshold].sum())


@dataclass(frozen=True)
class NetSizeBounds:
    """Natural-log upper bounds on the size of a minimal alpha-net."""

    log_finite_class: float
    log_vc: float | None
    vc_constant: float = 1.0  # stand-in for the unspecified O(.) constant


def net_size_bounds(universe_size: int, class_size: int, vcdim: int | None, alpha: float) -> NetSizeBounds:
    """ln of |X|^(ln|C|/alpha^2) and of |X|^(c * VC * ln(1/alpha)/alpha^2), c = 1."""
    if universe_size < 1 or class_size < 1 or alpha <= 0:
        raise InvalidInputError("universe size, class size and alpha must be positive")
    log_x = math.log(universe_size)
    finite = log_x * math.log(class_size) / alpha**2
    vc = None if vcdim is None else log_x * vcdim * math.log(1 / alpha) / alpha**2
    return NetSizeBounds(finite, vc)


def polyvc_rhs(vcdim: int, universe_size: int, alpha: float, epsilon: float, n: int, delta: float) -> float:
    """Right-hand side of the VC utility condition, hidden constant set to 1.

    The net mechanism is useful at ``alpha`` when ``alpha >=`` this value.
    """
    if min(vcdim, universe_size, n) < 1 or alpha <= 0 or epsilon <= 0 or not 0 < delta < 1:
        raise InvalidInputError("invalid arguments to the VC utility bound")
    inner = vcdim * math.log(universe_size) * math.log(1 / alpha) + math.log(1 / delta)
    return inner / (epsilon * alpha**2 * n)


def corollary_alpha(universe_size: int, n: int, class_size: int, epsilon: float, delta: float,
                    max_iter: int = 100) -> tuple[float, int]:
    """Self-consistent (alpha, m) for the counting-query utility condition.

    alpha depends on the net size, which depends on m, which depends on
    alpha. Iterate to a fixed point of m; returns the last alpha and m.
    """
    m = 1
    seen = set()
    for _ in range(max_iter):
        alpha = required_alpha(1.0 / n, epsilon, net_size(universe_size, m), delta)
        next_m = net_database_size(max(class_size, 2), min(alpha, 1 - 1e-12))
        if next_m == m or next_m in seen:
            return alpha, m
        seen.add(m)
        m = next_m
    raise InvalidInputError("alpha/m iteration did not settle")


def subsample_witness(db: Database, qclass: ExplicitClass, alpha: float, rng: np.random.Generator):
    """iid subsample of size net_database_size(|C|, alpha); returns (sample, error)."""
    if db.n == 0:
        raise InvalidInputError("database is empty")
    m = net_database_size(max(len(qclass), 2), alpha)
    probs = db.counts / db.n
    picks = rng.choice(len(db.universe), size=m, p=probs)
    sample = Database.from_indices(db.universe, picks)
    return sample, max_class_error(qclass, db, sample)
