"""Differentially private release of counting-query answers and synthetic data."""

from .core import (
    Database,
    ExplicitClass,
    HalfspaceClass,
    IntervalClass,
    Predicate,
    Universe,
    counting_sensitivity,
    evaluate_query,
    find_shattered_set,
    max_class_error,
    vc_dimension,
)
from .errors import InvalidInputError, NotFoundError, NumericError, ResourceLimitError
from .rng import make_rng

__version__ = "0.1.0"
