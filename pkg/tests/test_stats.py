import math
import warnings
from fractions import Fraction

import hypothesis.strategies as st
import numpy as np
import pytest
import scipy.stats
from hypothesis import given

from coverage_ph.stats import (
    Sample,
    brunner_munzel_one_sided,
    compare_deaths,
    log_transform,
    mann_whitney_one_sided,
    rank_with_ties,
    trim_short_deaths,
)

from oracles import brunner_munzel_statistic, mann_whitney_enumeration

values = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


def test_trim_drops_fifteen_or_less():
    assert trim_short_deaths([10, 15, 16, 200]).values == (16.0, 200.0)
    assert trim_short_deaths([3.0, 1.0, 2.0], threshold=0).values == (3.0, 1.0, 2.0)
    with pytest.raises(ValueError, match="no observations above threshold"):
        trim_short_deaths([1, 15, 15.0])


def test_log_transform():
    assert log_transform(Sample("x", (1.0,))).values == (0.0,)
    assert log_transform(Sample("x", (math.e,))).values[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        log_transform(Sample("x", (0.0, 2.0)))


@given(st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=30))
def test_log_transform_preserves_order(xs):
    logged = log_transform(Sample("x", tuple(xs))).values
    for i in range(len(xs) - 1):
        if xs[i] < xs[i + 1]:
            assert logged[i] <= logged[i + 1]


def test_ranks_examples():
    assert list(rank_with_ties([5, 5])) == [1.5, 1.5]
    assert list(rank_with_ties([1, 2, 3, 10])) == [1, 2, 3, 4]
    assert list(rank_with_ties([3, 1, 3, 2, 3])) == [4, 1, 4, 2, 4]


@given(values)
def test_rank_sum_conservation(xs):
    m = len(xs)
    assert float(np.sum(rank_with_ties(xs))) == pytest.approx(m * (m + 1) / 2, abs=1e-9)


@given(values)
def test_ranks_match_scipy(xs):
    np.testing.assert_array_equal(rank_with_ties(xs), scipy.stats.rankdata(xs))


def test_mann_whitney_smallest_exact_case():
    r = mann_whitney_one_sided([1, 2], [3, 4])
    assert r.statistic == 0 and r.method == "exact"
    assert Fraction(r.p_value).limit_denominator(1000) == Fraction(1, 6)
    assert mann_whitney_enumeration([1, 2], [3, 4]) == (0, Fraction(1, 6))


@pytest.mark.parametrize("seed", range(20))
def test_mann_whitney_exact_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n_a, n_b = rng.integers(2, 9, size=2)
    pool = rng.permutation(100)[: n_a + n_b] + rng.normal(0, 0.1)
    a, b = list(pool[:n_a]), list(pool[n_a:])
    for alt in ("less", "greater"):
        u, p = mann_whitney_enumeration(a, b, alt)
        r = mann_whitney_one_sided(a, b, alt)
        assert r.statistic == u
        assert r.p_value == pytest.approx(float(p), abs=1e-15)


def test_mann_whitney_identical_samples():
    rng = np.random.default_rng(1)
    a = list(rng.normal(size=40))
    r = mann_whitney_one_sided(a, a)
    assert r.method == "normal"
    assert r.p_value == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("sizes", [(3, 4), (12, 15), (30, 25)])
def test_mann_whitney_label_symmetry(sizes):
    rng = np.random.default_rng(sum(sizes))
    a = list(rng.normal(size=sizes[0]))
    b = list(rng.normal(0.3, size=sizes[1]))
    assert mann_whitney_one_sided(a, b, "less").p_value == pytest.approx(
        mann_whitney_one_sided(b, a, "greater").p_value, abs=1e-15
    )


def test_mann_whitney_normal_path_matches_scipy():
    rng = np.random.default_rng(5)
    a = np.round(rng.normal(size=25), 1)  # ties
    b = np.round(rng.normal(0.5, size=30), 1)
    r = mann_whitney_one_sided(a, b)
    ref = scipy.stats.mannwhitneyu(a, b, alternative="less", method="asymptotic", use_continuity=True)
    assert r.statistic == ref.statistic
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_mann_whitney_rejects_tiny_or_degenerate():
    with pytest.raises(ValueError):
        mann_whitney_one_sided([1], [2, 3])
    with pytest.raises(ValueError, match="degenerate"):
        mann_whitney_one_sided([1] * 15, [1] * 15)


@pytest.mark.parametrize("seed", range(15))
def test_brunner_munzel_statistic_matches_midrank_oracle(seed):
    rng = np.random.default_rng(seed)
    a = list(np.round(rng.normal(0, 1, 15), 1))
    b = list(np.round(rng.normal(0.4, 2, 15), 1))
    r = brunner_munzel_one_sided(a, b)
    assert r.statistic == pytest.approx(brunner_munzel_statistic(a, b), abs=1e-9)
    ref = scipy.stats.brunnermunzel(a, b, alternative="less")
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_brunner_munzel_identical_samples():
    a = list(np.random.default_rng(2).normal(size=50))
    r = brunner_munzel_one_sided(a, a)
    assert 0.48 <= r.p_value <= 0.52


def test_brunner_munzel_complete_separation():
    a = list(np.arange(20.0))
    b = list(np.arange(20.0) + 1000)
    assert brunner_munzel_one_sided(a, b, "less").p_value < 0.001
    assert brunner_munzel_one_sided(a, b, "greater").p_value == 1.0


def test_brunner_munzel_degenerate_and_small():
    with pytest.raises(ValueError, match="degenerate ranks"):
        brunner_munzel_one_sided([2.0] * 12, [2.0] * 12)
    with pytest.warns(UserWarning, match="recommended"):
        r = brunner_munzel_one_sided([1.0, 2.5, 3.0], [2.0, 4.0, 5.0])
    assert r.warnings


@given(
    st.lists(st.floats(0.01, 1e4), min_size=4, max_size=30, unique=True),
    st.integers(2, 100),
)
def test_tests_invariant_under_log(pool, cut):
    cut = min(max(2, cut % len(pool)), len(pool) - 2)
    a, b = pool[:cut], pool[cut:]
    la, lb = [math.log(x) for x in a], [math.log(x) for x in b]
    if len(set(la + lb)) < len(la + lb):
        return  # log collapsed two floats
    for test in (mann_whitney_one_sided, brunner_munzel_one_sided):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r1, r2 = test(a, b), test(la, lb)
        assert r1.p_value == r2.p_value
        assert 0.0 <= r1.p_value <= 1.0


def test_compare_deaths_direction():
    rng = np.random.default_rng(0)
    small = list(rng.uniform(20, 60, 40))
    large = list(rng.uniform(40, 120, 40))
    c = compare_deaths(small, large)
    report = c.report()
    assert report["n_a"] == 40 and report["trim_threshold"] == 15.0
    assert [t["name"] for t in report["tests"]] == ["mann-whitney", "brunner-munzel"]
    assert all(t["p_one_tailed"] < 0.05 for t in report["tests"])
    assert c.logged_a.logged and not c.raw_a.logged


def test_compare_needs_two_observations():
    with pytest.raises(ValueError):
        compare_deaths([20.0], [30.0, 40.0])
