"""Grid scan of alpha maximizing the KS p-value against the truncated BHP law."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bhp import BhpTable
from .fluctuation import normalize
from .gof import ks_test
from .market_data import SignedReturns


@dataclass(frozen=True)
class ScanEntry:
    alpha: float
    D: float
    p: float
    mu: float
    sigma: float
    L: float
    R: float


@dataclass(frozen=True)
class ScanResult:
    sign: str
    entries: tuple[ScanEntry, ...]

    @property
    def best(self) -> ScanEntry:
        # max p; ties go to the smallest alpha because entries are sorted by alpha
        return max(self.entries, key=lambda e: (e.p, -e.alpha))

    @property
    def alpha_star(self) -> float:
        return self.best.alpha

    @property
    def p_star(self) -> float:
        return self.best.p

    @property
    def D_star(self) -> float:
        return self.best.D

    def to_csv(self) -> str:
        rows = ["alpha,D,p,mu,sigma,L,R"]
        rows += [",".join(f"{v:.17g}" for v in (e.alpha, e.D, e.p, e.mu, e.sigma, e.L, e.R)) for e in self.entries]
        return "\n".join(rows) + "\n"

    def summary(self) -> dict:
        b = self.best
        return {"sign": self.sign, "alpha_star": b.alpha, "p_star": b.p, "D_star": b.D}


def alpha_grid(alpha_min: float = 0.4, alpha_max: float = 0.6, step: float = 0.01) -> np.ndarray:
    """Inclusive grid, rounded to 12 decimals so 0.4 + 10*0.01 prints as 0.5."""
    if not alpha_min < alpha_max:
        raise ValueError(f"alpha_min ({alpha_min}) must be below alpha_max ({alpha_max})")
    if not step > 0:
        raise ValueError("alpha step must be positive")
    n = int(np.floor((alpha_max - alpha_min) / step + 1e-9)) + 1
    return np.round(alpha_min + step * np.arange(n), 12)


def evaluate_alpha(magnitudes, alpha: float, table: BhpTable, sign: str = "positive") -> ScanEntry:
    """Normalize at ``alpha``, truncate the table to the observed range, run KS."""
    fl = normalize(magnitudes, alpha, sign)
    model = table.truncate(fl.lower, fl.upper)
    ks = ks_test(fl.values, model.cdf)
    return ScanEntry(float(alpha), ks.D, ks.p, fl.mu, fl.sigma, fl.lower, fl.upper)


def scan(
    population: SignedReturns,
    table: BhpTable,
    alpha_min: float = 0.4,
    alpha_max: float = 0.6,
    step: float = 0.01,
    workers: int | None = None,
) -> ScanResult:
    """Evaluate every alpha on the inclusive grid and keep the curve.

    ``workers > 1`` evaluates grid points on a thread pool; results are
    identical to the sequential run since entries depend only on their alpha.
    """
    grid = alpha_grid(alpha_min, alpha_max, step)
    if population.count == 0:
        raise ValueError(f"empty {population.sign} population")

    def run(a):
        return evaluate_alpha(population.magnitudes, a, table, population.sign)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            entries = list(pool.map(run, grid))
    else:
        entries = [run(a) for a in grid]
    return ScanResult(population.sign, tuple(entries))


def synthetic_magnitudes(
    table: BhpTable,
    count: int,
    seed: int,
    alpha: float = 0.5,
    mu0: float = 0.09,
    sigma0: float = 0.045,
) -> np.ndarray:
    """Magnitudes whose alpha-fluctuations are truncated-BHP draws.

    Draws y from the table truncated to (-mu0/sigma0, grid end], the range
    where sigma0*y + mu0 is positive, and returns (sigma0*y + mu0)**(1/alpha).
    """
    lower = -mu0 / sigma0
    y = table.truncate(lower, float(table.grid[-1])).sample(seed, count)
    base = sigma0 * y + mu0
    # a draw landing exactly on the bound would give a zero magnitude
    base = np.maximum(base, np.finfo(float).tiny)
    return base ** (1.0 / alpha)
