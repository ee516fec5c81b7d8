"""Exponential mechanism over an enumerated range.

Scores are supplied by the caller; this module never sees a database.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError


def _log_weights(scores, epsilon: float, sensitivity: float) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise InvalidInputError("exponential mechanism needs a non-empty 1-d score vector")
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError("quality scores must be finite")
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    if not (sensitivity > 0 and math.isfinite(sensitivity)):
        raise InvalidInputError(f"score sensitivity must be positive, got {sensitivity}")
    return epsilon * scores / (2.0 * sensitivity)


def exp_mech_log_distribution(scores, epsilon: float, sensitivity: float) -> np.ndarray:
    """Natural-log output probabilities, stabilised by the max log-weight."""
    w = _log_weights(scores, epsilon, sensitivity)
    w = w - w.max()
    return w - np.log(np.exp(w).sum())


def exp_mech_distribution(scores, epsilon: float, sensitivity: float) -> np.ndarray:
    """Output probabilities proportional to exp(epsilon * q / (2 * sensitivity))."""
    w = _log_weights(scores, epsilon, sensitivity)
    p = np.exp(w - w.max())
    return p / p.sum()


def sample_index(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    """Cumulative inverse sampling; ties go to the earlier index."""
    cdf = np.cumsum(probabilities)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def exp_mech_sample(scores, epsilon: float, sensitivity: float, rng: np.random.Generator) -> int:
    return sample_index(exp_mech_distribution(scores, epsilon, sensitivity), rng)
