import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from esgm.errors import UndefinedTauError
from esgm.rank_stats import (
    _inversion_pmf,
    independence_test,
    kendall_tau,
    null_variance,
    pair_signs,
    permutation_pvalue,
    tau_b_columns,
)
from oracles import exact_s_distribution, tau_b_pairs


def test_perfect_concordance_and_discordance():
    assert kendall_tau([1, 2, 3], [1, 2, 3]).tau == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1]).tau == -1.0


def test_tied_example_matches_pair_oracle():
    res = kendall_tau([1, 1, 2, 3], [1, 2, 3, 4])
    assert res.tau == tau_b_pairs([1, 1, 2, 3], [1, 2, 3, 4])
    assert res.tau == pytest.approx(5 / math.sqrt(30))
    assert res.tied_x and not res.tied_y


def test_argument_errors():
    with pytest.raises(ValueError):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(UndefinedTauError):
        kendall_tau([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau([1, np.nan], [1, 2])
    with pytest.raises(ValueError):
        independence_test(np.arange(9), np.arange(9))
    with pytest.raises(UndefinedTauError):
        independence_test(np.ones(12), np.arange(12))


def _pair_sample(rng, n, tied):
    if tied:
        return rng.integers(0, 5, n).astype(float), rng.integers(0, 4, n).astype(float)
    return rng.normal(size=n), rng.normal(size=n)


def test_matches_pair_oracle_on_random_vectors():
    rng = np.random.default_rng(0)
    for k in range(60):
        n = int(rng.integers(2, 80))
        x, y = _pair_sample(rng, n, k % 2 == 0)
        try:
            expected = tau_b_pairs(list(x), list(y))
        except ZeroDivisionError:
            continue
        assert abs(kendall_tau(x, y).tau - expected) <= 1e-12


def test_columns_bit_identical_to_scalar():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 6, 40).astype(float)
    X = rng.integers(0, 5, (40, 25)).astype(float)
    X[:, 3] = 2.0
    out = tau_b_columns(pair_signs(y), X)
    assert math.isnan(out[3])
    for k in range(25):
        if k != 3:
            assert out[k] == kendall_tau(X[:, k], y).tau


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=2, max_size=40))
def test_invariances(pairs):
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    try:
        t = kendall_tau(x, y).tau
    except UndefinedTauError:
        return
    assert kendall_tau(np.exp(x), y ** 3 + 2 * y).tau == t
    assert kendall_tau(x, -y).tau == -t
    assert kendall_tau(y, x).tau == t
    assert -1.0 <= t <= 1.0


def test_inversion_pmf_matches_enumeration():
    for n in range(2, 7):
        dist = exact_s_distribution(n)
        pmf = _inversion_pmf(n)
        n0 = n * (n - 1) // 2
        for s, count in dist.items():
            discordant = (n0 - s) // 2
            assert pmf[discordant] == pytest.approx(count / math.factorial(n), abs=1e-15)


def test_exact_test_agrees_with_scipy():
    rng = np.random.default_rng(2)
    for n in (10, 17, 30, 49):
        x = rng.normal(size=n)
        y = x + rng.normal(scale=2.0, size=n)
        for alt in ("greater", "less"):
            res = independence_test(x, y, alt)
            assert res.method == "exact"
            ref = stats.kendalltau(x, y, method="exact", alternative=alt).pvalue
            assert res.p_value == pytest.approx(ref, rel=1e-9, abs=1e-14)


def test_method_selection():
    rng = np.random.default_rng(3)
    x = rng.normal(size=60)
    assert independence_test(x, rng.normal(size=60)).method == "normal_approx"
    tied = np.repeat(np.arange(10.0), 2)
    assert independence_test(tied, rng.normal(size=20)).method == "normal_approx"


def test_null_variance_without_ties():
    n = 25
    rng = np.random.default_rng(4)
    assert null_variance(rng.normal(size=n), rng.normal(size=n)) == pytest.approx(
        n * (n - 1) * (2 * n + 5) / 18)


def test_null_variance_equals_permutation_variance():
    # with ties only in x the exact permutation variance has a closed form
    rng = np.random.default_rng(5)
    x = rng.integers(0, 4, 12).astype(float)
    y = rng.integers(0, 3, 12).astype(float)
    dx = pair_signs(x).astype(np.int64)
    s = np.array([dx @ pair_signs(rng.permutation(y)) for _ in range(40000)])
    assert null_variance(x, y) == pytest.approx(s.var(), rel=0.03)


def test_strong_concordance_is_significant():
    rng = np.random.default_rng(6)
    x = rng.normal(size=60)
    y = x + rng.normal(scale=0.9, size=60)
    res = independence_test(x, y, "greater")
    assert res.tau > 0.4
    assert res.p_value < 0.001


def test_wrong_direction_gives_large_p():
    x = np.arange(20.0)
    assert independence_test(x, x, "less").p_value == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(10, 70), st.integers(0, 2**31 - 1), st.booleans())
def test_p_value_antisymmetry(n, seed, tied):
    rng = np.random.default_rng(seed)
    x, y = _pair_sample(rng, n, tied)
    try:
        a = independence_test(x, -y, "greater")
    except UndefinedTauError:
        return
    b = independence_test(x, y, "less")
    assert a.p_value == pytest.approx(b.p_value, rel=1e-12, abs=1e-300)
    assert 0.0 <= a.p_value <= 1.0
    g = independence_test(x, y, "greater")
    if g.method == "exact":
        assert g.p_value + b.p_value >= 1.0 - 1e-12


def test_permutation_is_deterministic():
    rng = np.random.default_rng(7)
    x, y = rng.normal(size=25), rng.normal(size=25)
    assert permutation_pvalue(x, y, seed=9) == permutation_pvalue(x, y, seed=9)
    with pytest.raises(ValueError):
        permutation_pvalue(x, y, n_perm=999)


def test_permutation_extreme_statistic():
    x = np.arange(30.0)
    assert permutation_pvalue(x, x, "greater", n_perm=2000, seed=1) == 1 / 2001


def test_permutation_agrees_with_normal_approximation_n30():
    rng = np.random.default_rng(8)
    x = rng.integers(0, 6, 30).astype(float)
    y = 0.3 * x + rng.integers(0, 5, 30)
    approx = independence_test(x, y, "greater")
    assert approx.method == "normal_approx"
    assert abs(permutation_pvalue(x, y, "greater", seed=3) - approx.p_value) <= 0.02
