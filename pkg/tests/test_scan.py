import numpy as np
import pytest

from bhpfit.errors import NumericError
from bhpfit.market_data import SignedReturns
from bhpfit.scan import ScanEntry, ScanResult, alpha_grid, evaluate_alpha, scan, synthetic_magnitudes


def test_alpha_grid_inclusive():
    g = alpha_grid(0.4, 0.6, 0.01)
    assert g.size == 21
    assert g[0] == 0.4 and g[-1] == 0.6 and g[10] == 0.5


@pytest.mark.parametrize("args", [(0.6, 0.4, 0.01), (0.4, 0.4, 0.01), (0.4, 0.6, 0.0), (0.4, 0.6, -0.01)])
def test_alpha_grid_errors(args):
    with pytest.raises(ValueError):
        alpha_grid(*args)


def test_tie_breaks_to_smallest_alpha():
    e = dict(D=0.1, mu=0.0, sigma=1.0, L=-1.0, R=1.0)
    r = ScanResult("positive", (ScanEntry(0.4, p=0.2, **e), ScanEntry(0.5, p=0.3, **e), ScanEntry(0.6, p=0.3, **e)))
    assert r.alpha_star == 0.5 and r.p_star == 0.3


@pytest.fixture(scope="module")
def synthetic_population(table):
    return SignedReturns("positive", synthetic_magnitudes(table, 2500, 7), 2500)


def test_synthetic_construction_inverts_normalization(table):
    # at the true alpha, raw (un-restandardized) fluctuations are the truncated draws
    m = synthetic_magnitudes(table, 1000, 3, alpha=0.5)
    y = table.truncate(-2.0, table.grid[-1]).sample(3, 1000)
    np.testing.assert_allclose((m**0.5 - 0.09) / 0.045, y, atol=1e-9)


def test_synthetic_recovery(table, synthetic_population):
    r = scan(synthetic_population, table)
    assert 0.48 <= r.alpha_star <= 0.52
    assert r.p_star >= 0.05
    assert [e.alpha for e in r.entries] == list(alpha_grid())


def test_scan_pure_and_order_independent(table, synthetic_population):
    a = scan(synthetic_population, table)
    assert a == scan(synthetic_population, table)
    grid = alpha_grid()
    shuffled = {x: evaluate_alpha(synthetic_population.magnitudes, x, table) for x in np.random.default_rng(1).permutation(grid)}
    assert tuple(shuffled[x] for x in grid) == a.entries


def test_threaded_scan_matches(table, synthetic_population):
    assert scan(synthetic_population, table, workers=3) == scan(synthetic_population, table)


def test_entries_self_consistent(table, synthetic_population):
    r = scan(synthetic_population, table)
    for e in r.entries:
        assert 0 <= e.p <= 1 and 0 <= e.D <= 1
        assert e.L < 0 < e.R
        m = synthetic_population.magnitudes ** e.alpha
        assert e.mu == pytest.approx(m.mean()) and e.sigma == pytest.approx(m.std())


def test_p_curve_sanity_on_generic_populations(table, rng):
    for _ in range(10):
        n = int(rng.integers(50, 400))
        m = np.exp(rng.normal(-4.5, 1.0, n))
        r = scan(SignedReturns("negative", m, n), table)
        assert all(np.isfinite(e.p) and 0 <= e.p <= 1 for e in r.entries)


def test_degenerate_population(table):
    with pytest.raises(NumericError):
        scan(SignedReturns("positive", np.full(10, 0.01), 10), table)
    with pytest.raises(ValueError):
        scan(SignedReturns("positive", np.array([]), 0), table)


def test_csv_and_summary(table, synthetic_population):
    r = scan(synthetic_population, table, 0.45, 0.55, 0.05)
    lines = r.to_csv().splitlines()
    assert lines[0] == "alpha,D,p,mu,sigma,L,R" and len(lines) == 4
    assert set(r.summary()) == {"sign", "alpha_star", "p_star", "D_star"}
