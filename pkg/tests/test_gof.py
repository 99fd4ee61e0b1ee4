import numpy as np
import pytest
from scipy.special import kolmogorov
from scipy.stats import norm

from bhpfit.gof import distance_curve, kolmogorov_q, ks_pvalue, ks_statistic, ks_test

KOLMOGOROV_136 = 0.049485876755377876  # scipy.special.kolmogorov(1.36)


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def brute_force_sup(sample, cdf, lo, hi):
    """|F_emp - F| over a 1e5 grid plus every sample point and its left neighbourhood."""
    x = np.sort(sample)
    grid = np.concatenate([np.linspace(lo, hi, 100_000), x, x - 1e-10])
    emp = np.searchsorted(x, grid, side="right") / x.size
    return np.max(np.abs(emp - cdf(grid)))


def test_single_point_at_median():
    assert ks_statistic([0.5], uniform_cdf) == pytest.approx(0.5)


@pytest.mark.parametrize("n", [1, 7, 100])
def test_equioscillation(n):
    x = (np.arange(1, n + 1) - 0.5) / n
    assert ks_statistic(x, uniform_cdf) == pytest.approx(0.5 / n, abs=1e-15)


def test_against_dense_grid_oracle(rng):
    for _ in range(100):
        s = rng.normal(size=50)
        assert ks_statistic(s, norm.cdf) == pytest.approx(brute_force_sup(s, norm.cdf, -6, 6), abs=1e-6)


def test_ties_against_dense_grid_oracle(rng):
    for _ in range(20):
        s = np.round(rng.normal(size=60), 1)
        assert ks_statistic(s, norm.cdf) == pytest.approx(brute_force_sup(s, norm.cdf, -6, 6), abs=1e-6)


def test_permutation_invariance(rng):
    s = rng.normal(size=80)
    assert ks_statistic(s, norm.cdf) == ks_statistic(rng.permutation(s), norm.cdf)


def test_duplicate_point_changes_d_by_at_most_one_over_n(rng):
    for _ in range(50):
        s = rng.normal(size=40)
        d0 = ks_statistic(s, norm.cdf)
        d1 = ks_statistic(np.append(s, s[rng.integers(40)]), norm.cdf)
        assert abs(d1 - d0) <= 1 / 40 + 1e-15


def test_errors():
    with pytest.raises(ValueError):
        ks_statistic([], uniform_cdf)
    with pytest.raises(ValueError):
        ks_statistic([0.5], lambda x: x * 3)
    with pytest.raises(ValueError):
        ks_pvalue(0.2, 0)


def test_pvalue_perfect_fit():
    assert ks_pvalue(0.0, 100) == 1.0


def test_q_at_critical_point():
    q = kolmogorov_q(1.36)
    assert q == pytest.approx(0.049, abs=0.002)
    assert q == pytest.approx(KOLMOGOROV_136, abs=1e-12)


def test_q_matches_scipy_kolmogorov():
    lam = np.linspace(0.2, 4.0, 77)
    np.testing.assert_allclose([kolmogorov_q(v) for v in lam], kolmogorov(lam), atol=1e-12)


def test_stephens_correction():
    n, D = 30, 0.21
    assert ks_pvalue(D, n) == kolmogorov_q((np.sqrt(n) + 0.12 + 0.11 / np.sqrt(n)) * D)


def test_pvalue_strictly_decreasing(rng):
    # lam in [0.3, 5]: below that Q rounds to 1.0 in double precision
    for _ in range(100):
        n = int(rng.integers(5, 5000))
        k = np.sqrt(n) + 0.12 + 0.11 / np.sqrt(n)
        d1, d2 = np.sort(rng.uniform(0.3 / k, min(1.0, 5.0 / k), 2))
        if d2 > d1:
            assert ks_pvalue(d1, n) > ks_pvalue(d2, n)


def test_pvalue_clamped():
    assert 0.0 <= ks_pvalue(1.0, 1) <= 1.0
    assert ks_pvalue(1.0, 10_000) == 0.0


def test_pvalue_roughly_uniform_under_null(table):
    hits = 0
    for seed in range(200):
        s = table.sample(seed, 500)
        hits += ks_test(s, table.cdf).p < 0.1
    assert 0.04 <= hits / 200 <= 0.18


def test_distance_curve_equioscillation():
    n = 50
    x = (np.arange(1, n + 1) - 0.5) / n
    c = distance_curve(x, uniform_cdf, np.linspace(0, 1, 20001))
    assert c.d.max() <= 0.5 / n + 1e-4


def test_distance_curve_consistent_with_statistic(rng, table):
    for _ in range(20):
        s = table.sample(int(rng.integers(1 << 30)), 300)
        c = distance_curve(s, table.cdf)
        D = ks_statistic(s, table.cdf)
        assert c.d.max() <= D + 1e-12
        assert c.d.max() == pytest.approx(D, abs=1e-3)


def test_distance_curve_right_continuous():
    c = distance_curve([0.5], uniform_cdf, [0.5])
    assert c.d[0] == pytest.approx(0.5)  # F_emp(0.5) = 1


def test_distance_curve_csv():
    c = distance_curve([0.2, 0.7], uniform_cdf, [0.0, 1.0])
    assert c.to_csv().splitlines()[0] == "x,d"
    assert len(c.to_csv().splitlines()) == 3
