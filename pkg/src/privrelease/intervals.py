"""Private synthetic data for interval queries over {1, ..., 2**d}.

A sequence of noisy binary searches carves the domain into cells of roughly
equal mass; the release puts the same number of points in every cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .noise import BudgetLedger, NoiseFn, laplace_noise, split_budget

MAX_DEPTH = 30
ALL_PAIRS_MAX_DEPTH = 12


@dataclass(frozen=True, eq=False)
class PointDatabase:
    """Multiset of points in {1, ..., 2**d}, kept sorted for O(log n) range counts."""

    d: int
    points: np.ndarray

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DEPTH:
            raise InvalidInputError(f"bit-depth must be in [1, {MAX_DEPTH}], got {self.d}")
        pts = np.sort(np.asarray(self.points, dtype=np.int64).ravel())
        if pts.size and (pts[0] < 1 or pts[-1] > 2**self.d):
            raise InvalidInputError(f"points must lie in [1, {2**self.d}]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return int(self.points.size)

    @property
    def size(self) -> int:
        return 2**self.d

    def count(self, a1: int, a2: int) -> int:
        lo = np.searchsorted(self.points, a1, side="left")
        hi = np.searchsorted(self.points, a2, side="right")
        return int(hi - lo)

    def histogram(self) -> np.ndarray:
        """Counts indexed by point (index 0 unused)."""
        return np.bincount(self.points, minlength=self.size + 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, PointDatabase) and self.d == other.d and np.array_equal(self.points, other.points)


def _check_interval(db: PointDatabase, a1: int, a2: int) -> None:
    if not (1 <= a1 <= a2 <= db.size):
        raise InvalidInputError(f"interval [{a1}, {a2}] is not inside [1, {db.size}]")


def interval_query(db: PointDatabase, a1: int, a2: int) -> float:
    _check_interval(db, a1, a2)
    if db.n == 0:
        raise InvalidInputError("database is empty")
    return db.count(a1, a2) / db.n


@dataclass(frozen=True)
class IntervalParams:
    alpha: float
    epsilon: float
    d: int
    alpha_cell: float = field(init=False)  # alpha / 6, the target mass per cell
    max_intervals: int = field(init=False)
    epsilon_call: Fraction = field(init=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon}")
        if not 1 <= self.d <= MAX_DEPTH:
            raise InvalidInputError(f"bit-depth must be in [1, {MAX_DEPTH}]")
        a = self.alpha / 6
        object.__setattr__(self, "alpha_cell", a)
        # ceil(4 / (3a)); the small slack keeps 4/(3*(1/24)) at 32 instead of 33
        object.__setattr__(self, "max_intervals", math.ceil(4 / (3 * a) - 1e-9))
        object.__setattr__(self, "epsilon_call", split_budget(self.epsilon, self.d * self.max_intervals))

    @property
    def max_calls(self) -> int:
        return self.d * self.max_intervals

    @property
    def release_size(self) -> int:
        """Total-size parameter of the release: the smallest integer above 1/alpha_cell, plus one."""
        return math.ceil(1 / self.alpha_cell - 1e-9) + 1

    @property
    def points_per_cell(self) -> int:
        return max(1, math.ceil(self.alpha_cell * self.release_size - 1e-9))


@dataclass
class IntervalRelease:
    synthetic: PointDatabase
    bounds: list[int]
    params: IntervalParams
    ledger: BudgetLedger
    laplace_calls: int
    overran: bool  # MaxIntervals hit before the partition reached 2**d


def cells(bounds: list[int], top: int) -> list[tuple[int, int]]:
    """Closed integer ranges of the half-open cells; the last cell is closed at ``top``."""
    out = []
    for j in range(1, len(bounds)):
        lo, hi = bounds[j - 1], bounds[j]
        out.append((lo, hi if j == len(bounds) - 1 and hi == top else hi - 1))
    return out


def _place(lo: int, hi: int, k: int) -> list[int]:
    width = hi - lo + 1
    return [lo + (j * width) // k for j in range(k)]


def _nearest_point(x: float, lo: int, hi: int) -> int:
    """Round half up, clamped to [lo, hi]."""
    return min(max(math.floor(x + 0.5), lo), hi)


def release_intervals(
    db: PointDatabase,
    alpha: float,
    epsilon: float,
    rng: np.random.Generator,
    *,
    ledger: BudgetLedger | None = None,
    noise: NoiseFn | None = None,
) -> IntervalRelease:
    if db.n == 0:
        raise InvalidInputError("database is empty")
    params = IntervalParams(alpha, epsilon, db.d)
    ledger = ledger if ledger is not None else BudgetLedger()
    noise = noise or laplace_noise(rng)
    top = db.size
    eps_call = params.epsilon_call
    scale = 1.0 / (float(eps_call) * db.n)
    target = params.alpha_cell

    bounds = [1]
    calls = 0
    while bounds[-1] < top and len(bounds) - 1 < params.max_intervals:
        a = bounds[-1]
        # real-valued midpoint and step; after d halvings the step is below one point
        mid = a + (top - a) / 2
        increment = (top - a) / 4
        for _ in range(db.d):
            b = _nearest_point(mid, a, top)
            v_hat = db.count(a, b) / db.n + float(np.asarray(noise(scale, 1)).reshape(-1)[0])
            calls += 1
            if v_hat > target:
                mid -= increment
            else:
                mid += increment
            increment /= 2
        bounds.append(max(_nearest_point(mid, a, top), a + 1))
    if calls:
        ledger.spend("release_intervals", eps_call, calls)

    overran = bounds[-1] < top
    if overran:
        bounds[-1] = top

    k = params.points_per_cell
    pts = [p for lo, hi in cells(bounds, top) for p in _place(lo, hi, k)]
    return IntervalRelease(PointDatabase(db.d, pts), bounds, params, ledger, calls, overran)


def interval_utility_min_n(d: int, epsilon: float, alpha: float, delta: float) -> int:
    """Database size at which the release is claimed (alpha, delta)-useful."""
    if d < 1 or epsilon <= 0 or not 0 < alpha < 1 or not 0 < delta < 1:
        raise InvalidInputError("need d >= 1, epsilon > 0 and alpha, delta in (0, 1)")
    c = 8 * d / alpha
    return math.ceil(c / epsilon * math.log(c / delta))


def max_interval_error(d1: PointDatabase, d2: PointDatabase) -> float:
    """Exact max over all intervals of |Q(d1) - Q(d2)|.

    With F the difference of the two empirical CDFs, an interval [a, b] has
    error |F(b) - F(a-1)|, so the maximum is max(F) - min(F) over 0..2**d.
    """
    if d1.d != d2.d:
        raise InvalidInputError("databases are over different domains")
    if d1.d > ALL_PAIRS_MAX_DEPTH:
        raise ResourceLimitError(f"all-intervals scan is limited to d <= {ALL_PAIRS_MAX_DEPTH}")
    if d1.n == 0 or d2.n == 0:
        raise InvalidInputError("database is empty")
    h1, h2 = d1.histogram(), d2.histogram()
    # integer prefix sums scaled by n1*n2 keep the comparison exact
    f = np.cumsum(h1 * d2.n - h2 * d1.n)
    return float(Fraction(int(f.max() - f.min()), d1.n * d2.n))
