import math
from collections import Counter
from itertools import combinations_with_replacement

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privrelease.core import Database, ExplicitClass, Universe, max_class_error
from privrelease.errors import InvalidInputError, ResourceLimitError
from privrelease.expmech import exp_mech_distribution
from privrelease.harness.audit import exact_dp_audit, neighbor_pairs
from privrelease.netmech import (
    Net,
    corollary_alpha,
    enumerate_net,
    failure_mass,
    net_database_size,
    net_histograms,
    net_mechanism,
    net_output_distribution,
    net_size,
    net_size_bounds,
    required_alpha,
    subsample_witness,
)
from privrelease.rng import make_rng


@pytest.mark.parametrize("c, alpha, expected", [(100, 0.2, 67), (2, 0.9, 1)])
def test_net_database_size(c, alpha, expected):
    assert net_database_size(c, alpha) == expected


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_net_database_size_rejects_alpha(alpha):
    with pytest.raises(InvalidInputError):
        net_database_size(10, alpha)


@pytest.mark.parametrize("k, m, expected", [(3, 2, 6), (1, 5, 1), (6, 4, 126)])
def test_enumeration_counts(k, m, expected):
    stream = list(enumerate_net(Universe.range(k), m))
    assert len(stream) == expected == net_size(k, m)
    assert len(set(stream)) == expected
    assert all(len(t) == m for t in stream)


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError, match="candidates"):
        list(enumerate_net(Universe.range(30), 10, cap=1000))


def test_histograms_match_stream():
    hist = net_histograms(4, 3)
    for row, combo in zip(hist, combinations_with_replacement(range(4), 3)):
        assert Counter(combo) == Counter({i: c for i, c in enumerate(row) if c})


def test_net_errors_match_max_class_error():
    rng = make_rng(3)
    u = Universe.range(5)
    cls = ExplicitClass.random(5, 8, rng)
    db = Database.from_indices(u, rng.integers(0, 5, 11))
    net = Net.build(u, cls, 3)
    errs = net.errors(cls, db)
    for i in range(len(net)):
        assert errs[i] == pytest.approx(max_class_error(cls, db, net.candidate(i)), abs=1e-12)


def test_constant_quality_gives_uniform_output():
    u = Universe.range(3)
    cls = ExplicitClass(np.ones((1, 3), dtype=bool))
    db = Database.from_indices(u, [1, 1, 1, 1])
    res = net_mechanism(db, cls, 1.0, None, make_rng(0), m=2, want_exact_distribution=True)
    assert np.allclose(res.exact_output_distribution, 1 / 6)
    assert res.achieved_error == 0


def test_net_mechanism_output_matches_exponential_mechanism():
    u = Universe.range(4)
    cls = ExplicitClass.all_predicates(4)
    db = Database.from_indices(u, [0, 1, 1])
    net = Net.build(u, cls, 2)
    expected = exp_mech_distribution(
        [-max_class_error(cls, db, net.candidate(i)) for i in range(len(net))], 1.0, 1 / 3)
    assert np.allclose(net_output_distribution(db, cls, 1.0, net), expected)


def test_net_mechanism_sampling_frequencies():
    u = Universe.range(3)
    cls = ExplicitClass.all_predicates(3)
    db = Database.from_indices(u, [0, 0, 2])
    net = Net.build(u, cls, 2)
    p = net_output_distribution(db, cls, 2.0, net)
    rng = make_rng(7)
    draws = 20_000
    idx = np.bincount([net_mechanism(db, cls, 2.0, None, rng, net=net).index for _ in range(draws)],
                      minlength=len(net))
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(idx - draws * p) <= 4 * sigma + 1)


@pytest.mark.parametrize("args, expected", [
    ((1 / 30, 1.0, 100, 0.1), 0.4605170),
    ((1 / 30, 1.0, 1, 1.0), 0.0),
])
def test_required_alpha(args, expected):
    assert required_alpha(*args) == pytest.approx(expected, abs=1e-6)


def test_net_size_bounds():
    b = net_size_bounds(2, 2, 1, 1.0)
    assert b.log_finite_class == pytest.approx(math.log(2) ** 2)
    half = net_size_bounds(2, 2, 1, 0.5)
    assert half.log_finite_class == pytest.approx(4 * b.log_finite_class)


def test_vc_bound_below_finite_bound_when_vc_small():
    # holds when vcdim * ln(1/alpha) <= ln|C|
    b = net_size_bounds(50, 1000, 3, 0.2)
    assert b.log_vc <= b.log_finite_class


def test_corollary_alpha_fixed_point():
    alpha, m = corollary_alpha(6, 30, 20, 1.0, 0.1)
    assert m == net_database_size(20, alpha)
    assert alpha == pytest.approx(required_alpha(1 / 30, 1.0, net_size(6, m), 0.1))


def test_failure_mass_exact():
    assert failure_mass(np.array([0.2, 0.3, 0.5]), np.array([0.1, 0.5, 0.9]), 0.4) == pytest.approx(0.8)


def test_subsample_of_point_mass_is_exact():
    u = Universe.range(4)
    cls = ExplicitClass.random(4, 6, make_rng(0))
    db = Database.from_indices(u, [2] * 9)
    for s in range(10):
        _, err = subsample_witness(db, cls, 0.3, make_rng(s))
        assert err == 0


def test_exact_audit_identical_neighbour_is_zero():
    # a universe of one element has no distinct neighbours
    u = Universe.range(1)
    res = exact_dp_audit("net", u, 2, ExplicitClass(np.ones((1, 1), dtype=bool)), 1.0, m=1)
    assert res.max_log_ratio == 0


def test_exact_audit_rejects_other_mechanisms():
    with pytest.raises(InvalidInputError):
        exact_dp_audit("intervals", Universe.range(2), 2, ExplicitClass.all_predicates(1 + 1), 1.0, m=1)


def test_exact_audit_doubled_epsilon_still_passes():
    u = Universe.range(3)
    cls = ExplicitClass.all_predicates(3)
    for eps in (0.5, 1.0, 2.0):
        assert exact_dp_audit("net", u, 2, cls, eps, m=2).passed


def test_neighbour_pairs_count():
    # size-2 multisets over 3 elements: 6 databases, neighbours differ in one record
    pairs = neighbor_pairs(net_histograms(3, 2))
    assert len(pairs) == 9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.integers(1, 2), st.floats(0.1, 3), st.integers(0, 2**32 - 1))
def test_exact_audit_property(k, n, m, eps, seed):
    cls = ExplicitClass.random(k, min(2**k, 5), make_rng(seed))
    res = exact_dp_audit("net", Universe.range(k), n, cls, eps, m=m)
    assert res.max_log_ratio <= eps + 1e-9
