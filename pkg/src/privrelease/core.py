"""Universes, multiset databases, predicate classes and VC-dimension.

Databases are stored as element-count histograms over a fixed universe, so
a counting query is a dot product between a predicate bit-vector and the
histogram. Counts stay integral; fractions are formed at the last step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, NotFoundError, ResourceLimitError

VC_MAX_UNIVERSE = 24
VC_MAX_CLASS = 2**16


@dataclass(frozen=True)
class Universe:
    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise InvalidInputError("universe must be non-empty")
        if len(set(elements)) != len(elements):
            raise InvalidInputError("universe elements must be distinct")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def range(cls, size: int) -> "Universe":
        return cls(tuple(range(size)))

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, element: Hashable) -> int:
        try:
            return self.elements.index(element)
        except ValueError:
            raise InvalidInputError(f"{element!r} is not in the universe") from None


@dataclass(frozen=True, eq=False)
class Database:
    """A multiset of universe elements, held as a count per element."""

    universe: Universe
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.universe),):
            raise InvalidInputError(
                f"histogram length {counts.shape} does not match universe size {len(self.universe)}"
            )
        if (counts < 0).any():
            raise InvalidInputError("negative element count")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_indices(cls, universe: Universe, indices: Iterable[int]) -> "Database":
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= len(universe)):
            raise InvalidInputError("record index outside the universe")
        return cls(universe, np.bincount(idx, minlength=len(universe)))

    @classmethod
    def from_elements(cls, universe: Universe, elements: Iterable[Hashable]) -> "Database":
        return cls.from_indices(universe, [universe.index(e) for e in elements])

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def __len__(self) -> int:
        return self.n

    @property
    def records(self) -> tuple[int, ...]:
        """Sorted element indices, one per record."""
        return tuple(int(i) for i in np.repeat(np.arange(len(self.universe)), self.counts))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        return self.universe == other.universe and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash((self.universe, self.counts.tobytes()))

    def __repr__(self) -> str:
        return f"Database(n={self.n}, records={self.records})"


@dataclass(frozen=True, eq=False)
class Predicate:
    """Membership bit-vector over a universe."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).copy()
        if bits.ndim != 1:
            raise InvalidInputError("predicate must be a 1-d bit-vector")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "Predicate":
        if not s or set(s) - {"0", "1"}:
            raise InvalidInputError(f"predicate bit-string must be non-empty 0/1 text, got {s!r}")
        return cls(np.array([c == "1" for c in s]))

    @classmethod
    def indicator(cls, size: int, members: Iterable[int]) -> "Predicate":
        bits = np.zeros(size, dtype=bool)
        bits[list(members)] = True
        return cls(bits)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, Predicate) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())


@dataclass(frozen=True, eq=False)
class ExplicitClass:
    """A finite list of predicates, stored as a (|C|, |X|) boolean matrix."""

    matrix: np.ndarray
    kind: str = field(default="explicit", init=False)

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=bool)).copy()
        if mat.shape[0] == 0 or mat.shape[1] == 0:
            raise InvalidInputError("explicit query class must be non-empty")
        if len(np.unique(mat, axis=0)) != mat.shape[0]:
            raise InvalidInputError("explicit query class contains duplicate predicates")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_predicates(cls, predicates: Sequence[Predicate]) -> "ExplicitClass":
        if not predicates:
            raise InvalidInputError("explicit query class must be non-empty")
        return cls(np.stack([p.bits for p in predicates]))

    @classmethod
    def all_predicates(cls, universe_size: int) -> "ExplicitClass":
        codes = np.arange(2**universe_size)[:, None]
        return cls((codes >> np.arange(universe_size)) & 1)

    @classmethod
    def random(cls, universe_size: int, count: int, rng) -> "ExplicitClass":
        """``count`` distinct uniformly random predicates."""
        if count > 2**universe_size:
            raise InvalidInputError("more predicates requested than exist")
        seen: dict[bytes, np.ndarray] = {}
        while len(seen) < count:
            bits = rng.integers(0, 2, size=universe_size).astype(bool)
            seen.setdefault(bits.tobytes(), bits)
        return cls(np.stack(list(seen.values())))

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def universe_size(self) -> int:
        return self.matrix.shape[1]

    def __iter__(self):
        return (Predicate(row) for row in self.matrix)

    def __getitem__(self, i: int) -> Predicate:
        return Predicate(self.matrix[i])


@dataclass(frozen=True)
class IntervalClass:
    """All intervals [a1, a2] over {1, ..., 2**d}."""

    d: int
    kind: str = field(default="intervals", init=False)

    def __post_init__(self):
        if not 1 <= self.d <= 30:
            raise InvalidInputError(f"interval bit-depth must be in [1, 30], got {self.d}")


@dataclass(frozen=True)
class HalfspaceClass:
    """Halfspace queries in R^d, audited on queries of margin >= gamma."""

    d: int
    gamma: float
    kind: str = field(default="halfspaces", init=False)

    def __post_init__(self):
        if self.d < 1 or not self.gamma > 0:
            raise InvalidInputError("halfspace class needs d >= 1 and gamma > 0")


QueryClass = ExplicitClass | IntervalClass | HalfspaceClass


def _check_db(db: Database) -> None:
    if db.n == 0:
        raise InvalidInputError("database is empty")


def query_count(predicate: Predicate, db: Database) -> int:
    if predicate.bits.shape[0] != len(db.universe):
        raise InvalidInputError("predicate length does not match the universe")
    return int(db.counts[predicate.bits].sum())


def evaluate_query_exact(predicate: Predicate, db: Database) -> Fraction:
    _check_db(db)
    return Fraction(query_count(predicate, db), db.n)


def evaluate_query(predicate: Predicate, db: Database) -> float:
    """Fraction of records in ``db`` satisfying ``predicate``."""
    _check_db(db)
    return query_count(predicate, db) / db.n


def class_answers(cls: ExplicitClass, db: Database) -> np.ndarray:
    _check_db(db)
    if cls.universe_size != len(db.universe):
        raise InvalidInputError("query class and database use different universes")
    return cls.matrix.astype(np.int64) @ db.counts / db.n


def max_class_error_exact(cls: ExplicitClass, d1: Database, d2: Database) -> Fraction:
    _check_db(d1)
    _check_db(d2)
    if d1.universe != d2.universe:
        raise InvalidInputError("databases are over different universes")
    if cls.universe_size != len(d1.universe):
        raise InvalidInputError("query class and databases use different universes")
    mat = cls.matrix.astype(np.int64)
    diff = (mat @ d1.counts) * d2.n - (mat @ d2.counts) * d1.n
    return Fraction(int(np.abs(diff).max()), d1.n * d2.n)


def max_class_error(cls: ExplicitClass, d1: Database, d2: Database) -> float:
    """max over the class of |Q(d1) - Q(d2)|."""
    return float(max_class_error_exact(cls, d1, d2))


def counting_sensitivity(n: int) -> float:
    if n < 1:
        raise InvalidInputError("database size must be >= 1")
    return 1.0 / n


def _check_vc_guard(cls: ExplicitClass) -> None:
    if cls.universe_size > VC_MAX_UNIVERSE:
        raise ResourceLimitError(
            f"universe of size {cls.universe_size} exceeds the brute-force guard ({VC_MAX_UNIVERSE})"
        )
    if len(cls) > VC_MAX_CLASS:
        raise ResourceLimitError(f"class of size {len(cls)} exceeds the brute-force guard ({VC_MAX_CLASS})")


def shatters(cls: ExplicitClass, subset: Sequence[int]) -> bool:
    """True if the class realises all 2**|subset| labelings of ``subset``."""
    k = len(subset)
    if k == 0:
        return True
    if 2**k > len(cls):
        return False
    cols = cls.matrix[:, list(subset)].astype(np.int64)
    codes = cols @ (1 << np.arange(k, dtype=np.int64))
    return len(np.unique(codes)) == 2**k


def _first_shattered(cls: ExplicitClass, k: int):
    for subset in combinations(range(cls.universe_size), k):
        if shatters(cls, subset):
            return subset
    return None


def vc_dimension(cls: ExplicitClass, universe: Universe | None = None) -> int:
    """Largest k such that some k-subset of the universe is shattered.

    Shattering is hereditary, so the search stops at the first size with no
    shattered subset.
    """
    if universe is not None and len(universe) != cls.universe_size:
        raise InvalidInputError("query class and universe sizes differ")
    _check_vc_guard(cls)
    k = 0
    while k + 1 <= cls.universe_size and _first_shattered(cls, k + 1) is not None:
        k += 1
    return k


def find_shattered_set(cls: ExplicitClass, universe: Universe | None, d: int) -> tuple[int, ...]:
    """Lexicographically first d-subset (as universe indices) shattered by the class."""
    if universe is not None and len(universe) != cls.universe_size:
        raise InvalidInputError("query class and universe sizes differ")
    if d < 0:
        raise InvalidInputError("d must be non-negative")
    _check_vc_guard(cls)
    found = _first_shattered(cls, d) if d <= cls.universe_size else None
    if found is None:
        raise NotFoundError(f"no set of size {d} is shattered by the class")
    return tuple(found)
