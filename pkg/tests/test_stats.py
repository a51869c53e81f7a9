import itertools
import math

import numpy as np
import pytest
from scipy import stats as sps

from credulens import stats
from credulens.stats import StatsError


def test_p_from_z():
    assert stats.p_from_z(0.0) == 0.5
    assert stats.p_from_z(0.0, "two") == 1.0
    assert stats.p_from_z(-1.5) == stats.p_from_z(1.5)
    assert stats.p_from_z(1.96, "two") == pytest.approx(0.0499958, abs=1e-6)
    with pytest.raises(ValueError):
        stats.p_from_z(1.0, "three")


def test_normal_cdf_accuracy():
    for x in np.linspace(-8, 8, 161):
        assert stats.norm_cdf(x) == pytest.approx(sps.norm.cdf(x), rel=1e-12, abs=1e-300)


def test_chi2_and_f_and_t_against_scipy():
    for x in (0.1, 1.0, 3.84, 10.89):
        for df in (1, 2, 5):
            assert stats.chi2_sf(x, df) == pytest.approx(sps.chi2.sf(x, df), rel=1e-10)
    for f, d1, d2 in ((0.5, 1, 10), (4.2, 3, 40), (10.178, 1, 630)):
        assert stats.f_sf(f, d1, d2) == pytest.approx(sps.f.sf(f, d1, d2), rel=1e-10)
    for t, df in ((0.3, 5), (2.19, 6), (-3.19, 630)):
        assert stats.t_sf_two(t, df) == pytest.approx(2 * sps.t.sf(abs(t), df), rel=1e-10)


def test_pearson():
    assert stats.pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert stats.pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)
    assert stats.pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(5 / math.sqrt(2 * 114 / 9), abs=1e-12)
    assert stats.pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(0.99339, abs=1e-5)
    with pytest.raises(StatsError):
        stats.pearson([1, 1, 1], [1, 2, 3])


def test_pearson_test_against_scipy():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=40), rng.normal(size=40)
    res = stats.pearson_test(x, y)
    ref = sps.pearsonr(x, y)
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.p_value == pytest.approx(ref.pvalue, rel=1e-8)


def test_t_test_examples():
    r = stats.t_test([1, 2, 3, 4], [3, 4, 5, 6])
    assert r.statistic == pytest.approx(-2.1909, abs=1e-4)
    assert r.df == 6 and r.tail == "two"
    same = stats.t_test([1, 2, 5], [1, 2, 5], mode="paired")
    assert same.statistic == 0 and same.p_value == 1 and not same.passed
    with pytest.raises(StatsError):
        stats.t_test([1, 2], [3], mode="paired")
    with pytest.raises(StatsError):
        stats.t_test([1, 1], [1, 1])


def test_t_test_against_scipy():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=30), rng.normal(0.5, size=25)
    r = stats.t_test(x, y)
    ref = sps.ttest_ind(x, y)
    assert r.statistic == pytest.approx(ref.statistic) and r.p_value == pytest.approx(ref.pvalue)
    z = rng.normal(size=30)
    r = stats.t_test(x, z, mode="paired")
    ref = sps.ttest_rel(x, z)
    assert r.statistic == pytest.approx(ref.statistic) and r.p_value == pytest.approx(ref.pvalue)
    assert r.df == 29


def test_anova():
    r = stats.anova_oneway([[1, 2, 3], [4, 5, 6]])
    assert r.statistic == pytest.approx(13.5)
    assert r.df == (1, 4)
    zero = stats.anova_oneway([[1, 2, 3], [0, 2, 4]])
    assert zero.statistic == 0 and zero.p_value == 1
    with pytest.raises(StatsError):
        stats.anova_oneway([[1, 1], [2, 2]])
    rng = np.random.default_rng(3)
    gs = [rng.normal(i * 0.3, size=12) for i in range(3)]
    assert stats.anova_oneway(gs).p_value == pytest.approx(sps.f_oneway(*gs).pvalue)


def _u_pairs(x, y):
    return sum((a > b) + 0.5 * (a == b) for a in x for b in y)


def test_mann_whitney_examples():
    r = stats.mann_whitney([1, 2, 3], [4, 5, 6])
    assert r.details["U"] == 0
    assert r.statistic == pytest.approx(-4.5 / math.sqrt(5.25))
    assert r.statistic == pytest.approx(-1.9640, abs=1e-4)
    tied = stats.mann_whitney([1, 2, 3], [1, 2, 3])
    assert tied.details["U"] == 4.5 and tied.statistic == 0
    with pytest.raises(StatsError):
        stats.mann_whitney([2, 2], [2, 2, 2])


def _u_pairs_batch(vals, n1):
    x, y = vals[:, :n1, None], vals[:, None, n1:]
    return (x > y).sum(axis=(1, 2)) + 0.5 * (x == y).sum(axis=(1, 2))


def test_mann_whitney_u_exhaustive_up_to_six():
    for n in range(2, 7):
        vals = np.array(list(itertools.product(range(1, 5), repeat=n)), dtype=float)
        for n1 in range(1, n):
            want = _u_pairs_batch(vals, n1)
            got = [stats.mann_whitney_u(v[:n1], v[n1:]) for v in vals]
            assert np.array_equal(got, want)
    assert _u_pairs([1, 3], [2, 3]) == 1.5


def test_mann_whitney_against_scipy():
    rng = np.random.default_rng(4)
    x, y = rng.integers(0, 10, 40), rng.integers(0, 12, 35)
    r = stats.mann_whitney(x, y, tail="two")
    ref = sps.mannwhitneyu(x, y, use_continuity=False, method="asymptotic")
    assert r.details["U"] == ref.statistic
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)
    one = stats.mann_whitney(x, y, tail="one")
    ref = sps.mannwhitneyu(x, y, use_continuity=False, method="asymptotic", alternative="greater")
    assert one.p_value == pytest.approx(ref.pvalue, rel=1e-10)


def test_mann_whitney_one_tail_is_directional():
    lo, hi = np.arange(20.0), np.arange(20.0) + 8
    assert stats.mann_whitney(hi, lo).p_value < 0.05
    assert stats.mann_whitney(lo, hi).p_value > 0.95


def test_kruskal_wallis():
    r = stats.kruskal_wallis([[1, 2, 3], [4, 5, 6]])
    assert r.statistic == pytest.approx(12 / 42 * (3 * 1.5**2 + 3 * 1.5**2))
    assert r.statistic == pytest.approx(3.8571, abs=1e-4)
    same = stats.kruskal_wallis([[1, 2, 3], [1, 2, 3]])
    assert same.statistic == 0 and same.p_value == 1
    with pytest.raises(StatsError):
        stats.kruskal_wallis([[5, 5], [5]])
    rng = np.random.default_rng(5)
    gs = [rng.integers(0, 6, 15) for _ in range(3)]
    ref = sps.kruskal(*gs)
    r = stats.kruskal_wallis(gs)
    assert r.statistic == pytest.approx(ref.statistic) and r.p_value == pytest.approx(ref.pvalue)
    assert r.df == 2


def test_invariance_under_shift_and_scale():
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=25), rng.normal(0.4, size=30)
    base = [stats.mann_whitney(x, y).statistic, stats.kruskal_wallis([x, y]).statistic,
            stats.t_test(x, y).statistic, stats.anova_oneway([x, y]).statistic, stats.pearson(x, y[:25])]
    for a, b in ((1.0, 10.0), (3.5, 0.0), (0.2, -4.0)):
        moved = [stats.mann_whitney(a * x + b, a * y + b).statistic,
                 stats.kruskal_wallis([a * x + b, a * y + b]).statistic,
                 stats.t_test(a * x + b, a * y + b).statistic,
                 stats.anova_oneway([a * x + b, a * y + b]).statistic,
                 stats.pearson(a * x + b, a * y[:25] + b)]
        assert moved == pytest.approx(base, rel=1e-9)


def test_result_invariants():
    rng = np.random.default_rng(7)
    for _ in range(30):
        x, y = rng.normal(size=10), rng.normal(size=12)
        for r in (stats.t_test(x, y), stats.mann_whitney(x, y), stats.kruskal_wallis([x, y]),
                  stats.anova_oneway([x, y]), stats.pearson_test(x, y[:10])):
            assert 0 <= r.p_value <= 1
            assert r.passed == (r.p_value < r.alpha)
        assert stats.mann_whitney_u(x, y) + stats.mann_whitney_u(y, x) == len(x) * len(y)


def test_lilliefors_statistic_against_direct_formula():
    rng = np.random.default_rng(8)
    x = np.sort(rng.normal(size=50))
    z = (x - x.mean()) / x.std(ddof=1)
    cdf = sps.norm.cdf(z)
    n = len(x)
    d = max((np.arange(1, n + 1) / n - cdf).max(), (cdf - np.arange(n) / n).max())
    assert stats.lilliefors_d(x) == pytest.approx(d)


def test_ks_normality_small_n_and_constant():
    with pytest.raises(StatsError):
        stats.ks_normality([1, 2, 3])
    with pytest.raises(StatsError):
        stats.ks_normality([1, 1, 1, 1])


def test_ks_normality_worker_independent():
    x = np.random.default_rng(9).normal(size=60)
    a = stats.ks_normality(x, replicates=3000, seed=5)
    stats._NULL_CACHE.clear()
    b = stats.ks_normality(x, replicates=3000, seed=5, workers=4)
    assert a == b


def test_lilliefors_critical_value_close_to_table():
    # asymptotic 5% critical value 0.886/sqrt(n) for moderate n
    cv = stats.lilliefors_critical_value(100, replicates=5000, seed=1)
    assert cv == pytest.approx(0.886 / 10, rel=0.05)


def test_result_json():
    r = stats.anova_oneway([[1, 2, 3], [4, 5, 7]])
    d = r.to_json()
    assert d["df"] == [1, 4] and d["test"] == "anova_oneway" and d["n"] == [3, 3]
