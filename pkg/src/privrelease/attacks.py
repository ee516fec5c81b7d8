"""Reconstruction from accurate subset-query answers, and the mirrored-mod separation.

Subsets of a shattered set S are written as sorted tuples of positions in S
(0 .. d-1); candidates are enumerated in ``itertools.combinations`` order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .core import Database, ExplicitClass, Universe, find_shattered_set
from .errors import InvalidInputError, ResourceLimitError

FAMILY_CAP = 1_000_000


def _half_subsets(d: int) -> list[tuple[int, ...]]:
    if d < 2 or d % 2:
        raise InvalidInputError(f"shattered set size must be even and >= 2, got {d}")
    if math.comb(d, d // 2) > FAMILY_CAP:
        raise ResourceLimitError(f"C({d}, {d // 2}) candidates exceed the cap of {FAMILY_CAP}")
    return list(combinations(range(d), d // 2))


@dataclass(frozen=True)
class SubsetQueryFamily:
    """For each half-size subset T of S, the class predicate labelling exactly T within S."""

    shattered: tuple[int, ...]  # universe indices of S
    members: tuple[tuple[int, ...], ...]
    predicate_rows: tuple[int, ...]  # row of the source class realising each member
    qclass: ExplicitClass
    universe: Universe

    @property
    def d(self) -> int:
        return len(self.shattered)

    @classmethod
    def from_class(cls, qclass: ExplicitClass, universe: Universe, d: int) -> "SubsetQueryFamily":
        s = find_shattered_set(qclass, universe, d)
        members = _half_subsets(d)
        weights = 1 << np.arange(d, dtype=np.int64)
        codes = qclass.matrix[:, list(s)].astype(np.int64) @ weights
        first_row: dict[int, int] = {}
        for row, code in enumerate(codes.tolist()):
            first_row.setdefault(code, row)
        rows = tuple(first_row[sum(1 << p for p in t)] for t in members)
        return cls(tuple(s), tuple(members), rows, qclass, universe)

    @classmethod
    def on_set(cls, d: int) -> "SubsetQueryFamily":
        """Family over the universe S = {0..d-1} using exactly the indicator predicates."""
        members = _half_subsets(d)
        mat = np.zeros((len(members), d), dtype=bool)
        for i, t in enumerate(members):
            mat[i, list(t)] = True
        return cls(tuple(range(d)), tuple(members), tuple(range(len(members))), ExplicitClass(mat), Universe.range(d))

    def database(self, t: Sequence[int]) -> Database:
        """The database whose records are the elements of S at positions ``t``."""
        return Database.from_indices(self.universe, [self.shattered[p] for p in t])

    def predicate_bits(self, t: Sequence[int]) -> np.ndarray:
        return self.qclass.matrix[self.predicate_rows[self.members.index(tuple(t))]]

    def answer(self, t: Sequence[int], db: Database) -> Fraction:
        bits = self.predicate_bits(t)
        return Fraction(int(db.counts[bits].sum()), db.n)

    def answers(self, db: Database) -> dict[tuple[int, ...], Fraction]:
        return {t: self.answer(t, db) for t in self.members}

    def _check_member(self, t) -> tuple[int, ...]:
        t = tuple(sorted(t))
        if t not in self.members:
            raise InvalidInputError(f"{t} is not a half-size subset of the shattered set")
        return t


def symdiff_identity_check(t, t_prime, family: SubsetQueryFamily) -> tuple[Fraction, Fraction]:
    """(Q_T(T) - Q_T(T'), |T xor T'| / d), computed independently."""
    t = family._check_member(t)
    t_prime = family._check_member(t_prime)
    lhs = family.answer(t, family.database(t)) - family.answer(t, family.database(t_prime))
    rhs = Fraction(len(set(t) ^ set(t_prime)), family.d)
    return lhs, rhs


@dataclass
class ReconstructionResult:
    recovered: tuple[int, ...]
    scores: dict  # v_{T'} per candidate
    symdiff: int | None = None
    normalized_symdiff: float | None = None


def reconstruct(
    answers: Mapping[tuple[int, ...], float],
    d: int,
    target: Sequence[int] | None = None,
) -> ReconstructionResult:
    """Pick the candidate T' minimising v_{T'} = Q_{T'}(T') - answer_{T'}.

    Q_{T'}(T') is 1 for every candidate, so v_{T'} = 1 - answer_{T'}. Ties go
    to the first candidate in enumeration order. When ``target`` is given the
    symmetric difference to it is filled in.
    """
    members = _half_subsets(d)
    missing = [t for t in members if t not in answers]
    if missing:
        raise InvalidInputError(f"answers missing for {len(missing)} candidates, e.g. {missing[0]}")
    scores = {t: 1 - answers[t] for t in members}
    best = min(members, key=lambda t: scores[t])  # min keeps the first of equal keys
    result = ReconstructionResult(best, scores)
    if target is not None:
        sd = len(set(best) ^ set(target))
        result.symdiff = sd
        result.normalized_symdiff = sd / d
    return result


def mirrored_mod(x: int, m: int) -> int:
    if m < 1:
        raise InvalidInputError("modulus must be >= 1")
    if x < 0:
        raise InvalidInputError("mirrored mod is defined on non-negative integers")
    return x % m if x % (2 * m) < m else (-x - 1) % m


def mod_query(db, m: int) -> int:
    """Mirrored mod of the number of ones in a bit database."""
    bits = np.asarray(db)
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise InvalidInputError("records must be 0 or 1")
    return mirrored_mod(int(bits.sum()), m)


def separation_modulus(epsilon: float) -> int:
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    ratio = 2 / epsilon
    # 2/0.1 is 20.000000000000004 in floating point
    return max(2, math.ceil(ratio - 1e-9))


def separation_experiment(
    n: int,
    epsilon: float,
    trials: int,
    rng: np.random.Generator,
    *,
    threshold: float | None = None,
) -> float:
    """Frequency with which two uniform n-bit databases differ by >= 1/epsilon under Q_m.

    m is ceil(2/epsilon); ``threshold`` overrides 1/epsilon.
    """
    if n < 1 or trials < 1:
        raise InvalidInputError("n and trials must be >= 1")
    m = separation_modulus(epsilon)
    threshold = 1 / epsilon if threshold is None else threshold
    sums = rng.integers(0, 2, size=(trials, 2, n), dtype=np.int8).sum(axis=2, dtype=np.int64)
    k = sums % (2 * m)
    f = np.where(k < m, sums % m, (-sums - 1) % m)
    return float(np.mean(np.abs(f[:, 0] - f[:, 1]) >= threshold - 1e-12))
