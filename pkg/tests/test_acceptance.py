"""The twelve acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
Criteria 3 and 5 are expected to fail: see the notes on each.
"""

import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES
from privrelease.attacks import SubsetQueryFamily, reconstruct, separation_experiment, symdiff_identity_check
from privrelease.core import Database, ExplicitClass, Universe
from privrelease.halfspaces import (
    HalfspaceParams,
    PointCloud,
    evaluate_halfspace,
    halfspace_answers,
    jl_inner_product_check,
    jl_min_dimension,
    random_unit_vectors,
    release_halfspaces,
    sample_margin_queries,
)
from privrelease.harness import io
from privrelease.harness.audit import exact_dp_audit
from privrelease.harness.cli import main
from privrelease.intervals import PointDatabase, interval_utility_min_n, max_interval_error, release_intervals
from privrelease.netmech import (
    Net,
    corollary_alpha,
    failure_mass,
    net_database_size,
    net_output_distribution,
    subsample_witness,
)
from privrelease.noise import sample_laplace, zero_noise
from privrelease.rng import make_rng

SEED = 20240601


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[k] = f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {detail}"
    print(ACCEPTANCE_LINES[k])
    assert ok, detail


def test_c01_exact_dp_of_net_mechanism():
    t0 = time.perf_counter()
    res = exact_dp_audit("net", Universe.range(4), 3, ExplicitClass.all_predicates(4), 1.0, m=2)
    dt = time.perf_counter() - t0
    ok = res.max_log_ratio <= 1 + 1e-9 and dt < 60
    record(1, ok, f"exact DP audit max log-ratio {res.max_log_ratio:.12f} <= 1 over "
                  f"{res.neighbor_pairs} neighbour pairs ({dt:.1f}s)")


def test_c02_exact_usefulness_of_net_mechanism():
    t0 = time.perf_counter()
    n, eps, delta = 30, 1.0, 0.1
    rng = make_rng(SEED, 2)
    u = Universe.range(6)
    cls = ExplicitClass.random(6, 20, rng)
    db = Database.from_indices(u, rng.integers(0, 6, n))
    alpha, m = corollary_alpha(6, n, 20, eps, delta)
    net = Net.build(u, cls, m)
    mass = failure_mass(net_output_distribution(db, cls, eps, net), net.errors(cls, db), 2 * alpha)
    dt = time.perf_counter() - t0
    ok = mass <= delta and dt < 300
    record(2, ok, f"m={m}, |net|={len(net)}, alpha={alpha:.4f}: exact Pr[error > 2 alpha] = {mass:.3g} "
                  f"<= {delta} ({dt:.1f}s)")


def cluster_database(n: int, d: int = 8) -> PointDatabase:
    """Three tight clusters of six adjacent points each, far apart in the domain."""
    blocks = [np.arange(30, 36), np.arange(120, 126), np.arange(215, 221)]
    sizes = [n // 3 + (1 if j < n % 3 else 0) for j in range(3)]
    pts = np.concatenate([np.resize(b, s) for b, s in zip(blocks, sizes)])
    return PointDatabase(d, pts)


def test_c03_interval_release_utility():
    """Fails at n = 4019: per-call noise is Lap(256 / (0.5 n)), scale ~0.127, against
    a per-cell target mass of alpha/6 ~ 0.042, so the searches wander."""
    t0 = time.perf_counter()
    d, eps, alpha, delta = 8, 0.5, 0.25, 0.1
    n = interval_utility_min_n(d, eps, alpha, delta)
    assert n == 4019
    db = cluster_database(n, d)
    errors = [max_interval_error(db, release_intervals(db, alpha, eps, make_rng(SEED, t)).synthetic)
              for t in range(100)]
    good = sum(e <= alpha for e in errors)
    dt = time.perf_counter() - t0
    ok = good >= 90 and dt < 300
    record(3, ok, f"n={n}: {good}/100 trials with max interval error <= {alpha} (need 90); "
                  f"median error {np.median(errors):.3f} ({dt:.1f}s)")


def test_c04_interval_privacy_accounting():
    t0 = time.perf_counter()
    seen = {"runs": 0, "ok": True}

    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(st.integers(1, 10), st.floats(0.05, 0.95), st.floats(0.01, 10.0), st.integers(1, 300),
           st.integers(0, 2**32 - 1))
    def prop(d, alpha, eps, n, seed):
        rng = make_rng(seed)
        db = PointDatabase(d, rng.integers(1, 2**d + 1, n))
        res = release_intervals(db, alpha, eps, rng)
        cap = d * math.ceil(4 / (3 * (alpha / 6)) - 1e-9)
        good = res.ledger.total <= Fraction(eps) and res.laplace_calls <= cap
        seen["runs"] += 1
        seen["ok"] &= good
        assert good

    prop()
    dt = time.perf_counter() - t0
    ok = seen["ok"] and dt < 10
    record(4, ok, f"{seen['runs']} runs: ledger total <= epsilon exactly and calls <= d*MaxIntervals ({dt:.1f}s)")


def spread_cloud(n: int, d: int, rng) -> PointCloud:
    centres = random_unit_vectors(4, d, rng)
    pts = centres[rng.integers(0, 4, n)] + 0.05 * rng.standard_normal((n, d))
    return PointCloud(pts / np.linalg.norm(pts, axis=1, keepdims=True))


HALFSPACE = dict(d=6, gamma=0.4, alpha=0.2, beta=0.05, epsilon=1.0, T_override=6, grid_step_override=0.5,
                 m_override=200)


def halfspace_accuracy(noise=None):
    rng = make_rng(SEED, 5)
    cloud = spread_cloud(5000, 6, rng)
    params = HalfspaceParams(**HALFSPACE)
    s = release_halfspaces(cloud, params, make_rng(SEED, 6), noise=noise)
    ys = sample_margin_queries(cloud, 0.4, 100, make_rng(SEED, 7))
    truth = halfspace_answers(cloud.points, ys)
    est = np.array([evaluate_halfspace(s, y) for y in ys])
    return np.abs(truth - est), params, len(s.net)


@pytest.mark.slow
def test_c05_halfspace_release_override_mode():
    """Fails: with |U| = 5^6 - 1 = 15624 net points, each value gets
    Lap(200 * 15624 / 5000) = Lap(625) noise; averaging over m=200 leaves sd ~62."""
    t0 = time.perf_counter()
    err, params, size = halfspace_accuracy()
    good = int((err <= 0.2).sum())
    dt = time.perf_counter() - t0
    ok = good >= 95 and dt < 600
    record(5, ok, f"override T=6, step 0.5, m=200, |U|={size} (theory T={params.T_theory}, m={params.m_theory}): "
                  f"{good}/100 margin queries within 0.2 (need 95); median error {np.median(err):.3g} ({dt:.1f}s)")


@pytest.mark.slow
def test_c05_diagnostic_noiseless_structure():
    """Not a criterion: the same structure without noise, isolating projection and net error."""
    err, _, _ = halfspace_accuracy(noise=zero_noise)
    print(f"diagnostic: noiseless structure {(err <= 0.2).sum()}/100 within 0.2, median {np.median(err):.3g}")
    assert (err <= 0.2).sum() >= 95


def test_c06_jl_inner_products():
    t0 = time.perf_counter()
    T = jl_min_dimension(0.5, 0.1)
    assert T == math.ceil(20 * 4 * math.log(10)) == 185
    rng = make_rng(SEED, 6)
    x, y = random_unit_vectors(2, 50, rng)
    trials = 10_000
    rate = jl_inner_product_check(x, y, T, 0.5, trials, rng)
    bound = 0.2 + 3 * math.sqrt(0.2 * 0.8 / trials)
    dt = time.perf_counter() - t0
    ok = rate <= bound and dt < 60
    record(6, ok, f"T={T}: violation rate {rate:.4f} <= {bound:.4f} ({dt:.1f}s)")


def test_c07_reconstruction_attack():
    t0 = time.perf_counter()
    d, a = 10, 0.05
    fam = SubsetQueryFamily.on_set(d)
    exact_worst, noisy_worst = 0, 0
    rng = make_rng(SEED, 7)
    for t in fam.members:
        exact = fam.answers(fam.database(t))
        exact_worst = max(exact_worst, reconstruct({k: float(v) for k, v in exact.items()}, d, t).symdiff)
        # adversarial: truth pushed down, rivals pushed up; plus a random-sign variant
        adv = {k: float(v) + (-a if k == t else a) for k, v in exact.items()}
        signs = rng.choice([-1.0, 1.0], len(fam.members))
        rnd = {k: float(v) + s * a for (k, v), s in zip(exact.items(), signs)}
        for answers in (adv, rnd):
            noisy_worst = max(noisy_worst, reconstruct(answers, d, t).symdiff)
    dt = time.perf_counter() - t0
    ok = len(fam.members) == 252 and exact_worst == 0 and noisy_worst <= 1 and dt < 60
    record(7, ok, f"252 targets: exact max |T xor T'| = {exact_worst}, perturbed +-{a} max = {noisy_worst} "
                  f"({dt:.1f}s)")


def test_c08_symdiff_identity():
    t0 = time.perf_counter()
    fam = SubsetQueryFamily.on_set(8)
    pairs = 0
    ok = True
    for t, tp in product(fam.members, repeat=2):
        lhs, rhs = symdiff_identity_check(t, tp, fam)
        ok &= lhs == rhs
        pairs += 1
    dt = time.perf_counter() - t0
    ok = ok and dt < 60
    record(8, ok, f"{pairs} ordered pairs at d=8: exact equality ({dt:.1f}s)")


def test_c09_subsample_witness():
    t0 = time.perf_counter()
    rng = make_rng(SEED, 9)
    u = Universe.range(50)
    cls = ExplicitClass.random(50, 100, rng)
    db = Database.from_indices(u, rng.integers(0, 50, 1000))
    m = net_database_size(100, 0.2)
    assert m == 67
    good = sum(subsample_witness(db, cls, 0.2, make_rng(SEED, 100 + t))[1] <= 0.2 for t in range(100))
    dt = time.perf_counter() - t0
    ok = good >= 50 and dt < 60
    record(9, ok, f"m={m}: {good}/100 subsamples with error <= 0.2 (need 50) ({dt:.1f}s)")


def test_c10_laplace_moments_and_tails():
    t0 = time.perf_counter()
    z = sample_laplace(1.0, make_rng(SEED, 10), 1_000_000)
    mean, var = float(z.mean()), float(z.var())
    tail = float(np.mean(np.abs(z) > 3))
    p = math.exp(-3)
    sigma = math.sqrt(p * (1 - p) / z.size)
    dt = time.perf_counter() - t0
    ok = abs(mean) <= 0.01 and abs(var - 2) <= 0.05 and abs(tail - p) <= 3 * sigma and dt < 30
    record(10, ok, f"mean {mean:+.4f}, variance {var:.4f}, Pr[|Z|>3] {tail:.5f} vs {p:.5f} +- {3 * sigma:.5f} "
                   f"({dt:.1f}s)")


def test_c11_separation_demo():
    t0 = time.perf_counter()
    freq = separation_experiment(100, 0.1, 10_000, make_rng(SEED, 11))
    dt = time.perf_counter() - t0
    ok = freq >= 0.10 and dt < 30
    record(11, ok, f"frequency {freq:.4f} >= 0.10 ({dt:.1f}s)")


def test_c12_determinism(tmp_path):
    rng = make_rng(SEED, 12)
    cls = ExplicitClass.random(5, 8, rng)
    (tmp_path / "q.json").write_text(io.dumps(io.query_spec(cls)))
    io.write_discrete_dataset(tmp_path / "db.txt", rng.integers(0, 5, 25))
    io.write_discrete_dataset(tmp_path / "pts.txt", rng.integers(1, 65, 300))
    (tmp_path / "iq.json").write_text('{"kind": "intervals", "d": 6}')
    io.write_point_cloud(tmp_path / "cloud.txt", random_unit_vectors(80, 3, rng))
    (tmp_path / "hq.json").write_text('{"kind": "halfspaces", "d": 3, "gamma": 0.2}')
    f = str(tmp_path)
    commands = [
        ["release-net", "--input", f"{f}/db.txt", "--queries", f"{f}/q.json", "--alpha", "0.4"],
        ["release-intervals", "--input", f"{f}/pts.txt", "--queries", f"{f}/iq.json", "--alpha", "0.3"],
        ["release-halfspaces", "--input", f"{f}/cloud.txt", "--queries", f"{f}/hq.json", "--alpha", "0.2",
         "--beta", "0.05", "--override-T", "3", "--override-grid-step", "0.5", "--override-m", "5"],
        ["laplace-answer", "--input", f"{f}/db.txt", "--queries", f"{f}/q.json"],
        ["eval-usefulness", "--input", f"{f}/pts.txt", "--queries", f"{f}/iq.json", "--alpha", "0.3",
         "--trials", "5"],
        ["attack-reconstruct", "--dim", "8", "--alpha", "0.05"],
        ["separation-demo", "--n", "100", "--epsilon", "0.1", "--trials", "2000"],
    ]
    identical = 0
    for args in commands:
        out = tmp_path / f"{args[0]}.json"
        structure = tmp_path / f"{args[0]}.structure.json"
        runs = []
        for _ in range(2):
            assert main(args + ["--seed", "12345", "--output", str(out)]) == 0
            runs.append((out.read_bytes(), structure.read_bytes() if structure.exists() else b""))
        identical += runs[0] == runs[1]
    ok = identical == len(commands)
    record(12, ok, f"{identical}/{len(commands)} randomized commands byte-identical on rerun "
                   "(reports and release files)")
