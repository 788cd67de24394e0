import math

import numpy as np
import pytest

from pilothash.assignment import (
    GRID,
    AssignmentSpec,
    AssignmentTable,
    beta_eps,
    beta_star,
    bucket_count,
    bucket_for_hash,
    bucket_many,
    default_epsilon,
    eval_many,
    eval_table,
    inverse,
    skew,
    tabulate,
)

# closed forms evaluated at 40-digit precision, frozen
BETA_STAR_HALF = 0.15342640972002735
BETA_EPS_HALF_032 = 0.16451676460898647


def test_beta_star_endpoints_and_value():
    assert beta_star(0.0) == 0.0
    assert beta_star(1.0) == 1.0
    assert beta_star(0.5) == pytest.approx(BETA_STAR_HALF, abs=1e-15)
    with pytest.raises(ValueError):
        beta_star(-0.01)
    with pytest.raises(ValueError):
        beta_star(1.01)


def test_beta_eps_degenerate_and_value():
    for x in np.linspace(0, 1, 23):
        assert beta_eps(float(x), 0.0) == beta_star(float(x))
    assert beta_eps(1.0, 0.3) == 1.0
    assert beta_eps(0.5, 0.032) == pytest.approx(BETA_EPS_HALF_032, abs=1e-15)
    with pytest.raises(ValueError):
        beta_eps(0.5, 1.0)


def test_default_epsilon():
    assert default_epsilon(8.0, 2500.0) == pytest.approx(0.032, abs=1e-15)
    assert default_epsilon(4.5, 2500.0) == pytest.approx(0.018, abs=1e-15)
    assert default_epsilon(0.0, 2500.0) == 0.0
    assert default_epsilon(1e9, 1.0) == 0.99


def test_skew_pieces():
    assert skew(0.0) == 0.0
    assert skew(1.0) == 1.0
    assert skew(0.6) == pytest.approx(0.3, abs=1e-15)
    assert skew(0.8) == pytest.approx(0.65, abs=1e-15)
    with pytest.raises(ValueError):
        skew(1.5)


def test_bucket_count_rounding():
    assert bucket_count(2500.0, 8.0) == 312
    assert bucket_count(2500.0, 4.0) == 625
    assert bucket_count(1.0, 100.0) == 1


def test_tabulate_uniform_is_identity_grid():
    t = tabulate(AssignmentSpec("uniform"))
    for k in (0, 1, 700, 2048):
        assert t.entries[k] == k / GRID


@pytest.mark.parametrize(
    "spec",
    [
        AssignmentSpec("uniform"),
        AssignmentSpec("skew"),
        AssignmentSpec("beta_star"),
        AssignmentSpec("beta_eps", 0.032),
    ],
)
def test_table_invariants(spec):
    t = tabulate(spec)
    assert t.entries[0] == 0.0
    assert t.entries[GRID] == 1.0
    assert np.all(np.diff(t.entries) >= 0)
    if spec.kind == "beta_eps" and spec.epsilon > 0:
        assert t.strictly_increasing


def test_tabulate_beta_eps_midpoint_entry():
    t = tabulate(AssignmentSpec("beta_eps", 0.032))
    assert t.entries[1024] == pytest.approx(BETA_EPS_HALF_032, abs=1e-15)


def test_eval_exact_at_grid_points():
    t = tabulate(AssignmentSpec("beta_eps", 0.032))
    for k in (1, 2, 512, 1024, 2048):
        assert eval_table(t, k / GRID) == t.entries[k]


def test_eval_identity_and_endpoint():
    t = tabulate(AssignmentSpec("uniform"))
    assert eval_table(t, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert eval_table(t, 1.0) == 1.0
    with pytest.raises(ValueError):
        eval_table(t, 0.0)
    with pytest.raises(ValueError):
        eval_table(t, 1.0000001)


def test_eval_interpolates_between_grid_points():
    t = tabulate(AssignmentSpec("beta_eps", 0.032))
    x = 3 / 4096  # midpoint of grid cells 1 and 2
    mid = 0.5 * (t.entries[1] + t.entries[2])
    assert eval_table(t, x) == pytest.approx(mid, rel=1e-12)
    assert eval_table(t, x) == pytest.approx(2.3726071037234354e-05, rel=1e-12)


def test_eval_many_matches_scalar():
    t = tabulate(AssignmentSpec("beta_eps", 0.032))
    xs = np.concatenate([np.linspace(1e-9, 1.0, 1001), [1.0, 0.5, 1 / GRID]])
    vec = eval_many(t, xs)
    for i in range(0, len(xs), 53):
        assert vec[i] == eval_table(t, float(xs[i]))


def test_bucket_for_hash_examples():
    u = tabulate(AssignmentSpec("uniform"))
    assert bucket_for_hash(u, 0.005, 100) == 1
    assert bucket_for_hash(u, 1.0, 100) == 100
    be = tabulate(AssignmentSpec("beta_eps", 0.032))
    assert bucket_for_hash(be, 0.5, 312) == 52


def test_bucket_for_hash_monotone_and_covering():
    be = tabulate(AssignmentSpec("beta_eps", 0.032))
    bcount = 17
    xs = np.linspace(1e-6, 1.0, 20001)
    bs = [bucket_for_hash(be, float(x), bcount) for x in xs]
    assert all(b2 >= b1 for b1, b2 in zip(bs, bs[1:]))
    assert set(bs) == set(range(1, bcount + 1))
    vec = bucket_many(be, xs, bcount)
    assert np.array_equal(vec, np.array(bs))


def test_inverse_identity_endpoints_and_roundtrip():
    u = tabulate(AssignmentSpec("uniform"))
    assert inverse(u, 0.0) == 0.0
    assert inverse(u, 1.0) == 1.0
    assert inverse(u, 0.3) == pytest.approx(0.3, abs=1e-9)
    be = tabulate(AssignmentSpec("beta_eps", 0.032))
    assert inverse(be, BETA_EPS_HALF_032) == pytest.approx(0.5, abs=1e-9)
    for y in np.arange(0.001, 1.0, 0.001):
        x = inverse(be, float(y))
        assert abs(eval_table(be, x) - y) <= 1e-9


def test_inverse_requires_strictly_increasing():
    flat = np.linspace(0, 1, GRID + 1)
    flat[100] = flat[99]  # introduce a flat step
    t = AssignmentTable(flat, AssignmentSpec("uniform"))
    with pytest.raises(ValueError):
        inverse(t, 0.5)


def test_expected_size_cap_and_monotonicity():
    """max expected bucket size <= lam/eps + lam; sizes non-increasing."""
    from pilothash.analysis import expected_bucket_sizes

    P = 2500.0
    for lam in (4.0, 8.0, 16.0):
        eps = default_epsilon(lam, P)
        t = tabulate(AssignmentSpec("beta_eps", eps))
        bcount = bucket_count(P, lam)
        sizes = expected_bucket_sizes(t, int(P), bcount)
        assert sizes.max() <= lam / eps + lam
        assert np.all(np.diff(sizes) <= 0)
        assert sizes.sum() == pytest.approx(P, abs=1e-6 * P)


def test_spec_validation():
    with pytest.raises(ValueError):
        AssignmentSpec("nope")
    with pytest.raises(ValueError):
        AssignmentSpec("beta_eps", 1.5)
    assert AssignmentSpec("beta-eps", 0.01).kind == "beta_eps"
