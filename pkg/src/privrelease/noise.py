"""Laplace noise, the Laplace mechanism for counting queries, and a budget ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import Database, Predicate, evaluate_query
from .errors import InvalidInputError

# noise(scale, size) -> array of draws; mechanisms take one of these so tests
# can substitute degenerate noise.
NoiseFn = Callable[[float, int], np.ndarray]


def _check_scale(b: float) -> None:
    if not (b > 0 and math.isfinite(b)):
        raise InvalidInputError(f"Laplace scale must be positive and finite, got {b}")


def _check_epsilon(epsilon: float) -> None:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidInputError(f"epsilon must be positive and finite, got {epsilon}")


def laplace_pdf(x, b: float):
    _check_scale(b)
    return np.exp(-np.abs(x) / b) / (2 * b)


def sample_laplace(b: float, rng: np.random.Generator, size=None):
    """Inverse-CDF Laplace draws, one uniform per draw.

    U is uniform on (-1/2, 1/2) and Z = -b * sign(U) * ln(1 - 2|U|).
    """
    _check_scale(b)
    u = rng.random(size)
    # rng.random is [0, 1); u == 0 would map to U = -1/2 and an infinite draw
    u = np.where(u == 0.0, 0.5, u)
    centered = u - 0.5
    z = -b * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))
    return float(z) if size is None else z


def laplace_noise(rng: np.random.Generator) -> NoiseFn:
    return lambda scale, size: sample_laplace(scale, rng, size)


def zero_noise(scale: float, size: int) -> np.ndarray:
    return np.zeros(size)


@dataclass
class BudgetLedger:
    """Record of privacy spend under basic composition.

    Amounts are held as exact rationals so that splitting a budget into k
    equal shares and re-summing gives back exactly the original budget. The
    ledger records; it never refuses a spend.
    """

    entries: list = field(default_factory=list)

    def spend(self, label: str, epsilon, count: int = 1) -> None:
        eps = Fraction(epsilon)
        if eps <= 0:
            raise InvalidInputError(f"ledger entries must be positive, got {epsilon}")
        if count < 1:
            raise InvalidInputError("count must be >= 1")
        self.entries.append((label, eps, count))

    @property
    def total(self) -> Fraction:
        return sum((eps * count for _, eps, count in self.entries), Fraction(0))

    @property
    def calls(self) -> int:
        return sum(count for *_, count in self.entries)

    def to_dict(self) -> dict:
        return {
            "total": float(self.total),
            "total_exact": str(self.total),
            "calls": self.calls,
            "entries": [
                {"label": label, "epsilon": float(eps), "epsilon_exact": str(eps), "count": count}
                for label, eps, count in self.entries
            ],
        }


def split_budget(epsilon, parts: int) -> Fraction:
    """Exact per-call share of ``epsilon`` over ``parts`` calls."""
    return Fraction(epsilon) / parts


def laplace_answer(
    query: Predicate,
    db: Database,
    epsilon: float,
    ledger: BudgetLedger,
    rng: np.random.Generator,
    *,
    label: str = "laplace_answer",
    noise: NoiseFn | None = None,
) -> float:
    """Counting-query answer plus Lap(1/(epsilon * n)) noise."""
    _check_epsilon(epsilon)
    value = evaluate_query(query, db)
    noise = noise or laplace_noise(rng)
    z = float(np.asarray(noise(1.0 / (epsilon * db.n), 1)).reshape(-1)[0])
    ledger.spend(label, epsilon)
    return value + z
