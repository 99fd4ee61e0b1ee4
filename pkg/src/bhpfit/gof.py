"""One-sample Kolmogorov-Smirnov test and the pointwise cdf distance map."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

SERIES_TOL = 1e-12


@dataclass(frozen=True)
class KsResult:
    D: float
    n: int
    p: float


@dataclass(frozen=True)
class DistanceCurve:
    grid: np.ndarray
    d: np.ndarray

    def to_csv(self) -> str:
        rows = ["x,d"] + [f"{x:.17g},{v:.17g}" for x, v in zip(self.grid, self.d)]
        return "\n".join(rows) + "\n"

    @property
    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.d))])


def _model_values(cdf: Callable, x: np.ndarray) -> np.ndarray:
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape:
        f = np.broadcast_to(f, x.shape)
    if not np.all((f >= 0.0) & (f <= 1.0)):
        raise ValueError("model cdf returned values outside [0, 1]")
    return f


def ks_statistic(sample, cdf: Callable) -> float:
    """Supremum distance between the empirical cdf of ``sample`` and ``cdf``.

    Tied values are handled as one jump of size multiplicity / n.
    """
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    values, counts = np.unique(x, return_counts=True)
    after = np.cumsum(counts) / n
    before = after - counts / n
    f = _model_values(cdf, values)
    return float(max(np.max(after - f), np.max(f - before), 0.0))


def ks_pvalue(D: float, n: int) -> float:
    """Asymptotic Kolmogorov tail probability with Stephens' small-n correction.

    Q(lam) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lam^2),
    lam = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= D <= 1.0:
        raise ValueError(f"D must lie in [0, 1], got {D}")
    rn = math.sqrt(n)
    lam = (rn + 0.12 + 0.11 / rn) * D
    return kolmogorov_q(lam)


def kolmogorov_q(lam: float) -> float:
    if lam < 1e-3:
        # Q is 1 to machine precision well before this
        return 1.0
    total, j = 0.0, 1
    while True:
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < SERIES_TOL:
            break
        j += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(sample, cdf: Callable) -> KsResult:
    n = int(np.asarray(sample).size)
    D = ks_statistic(sample, cdf)
    return KsResult(D, n, ks_pvalue(D, n))


def distance_curve(sample, cdf: Callable, grid=None, points: int = 4001) -> DistanceCurve:
    """|F_emp(x) - F(x)| on ``grid`` (default: ``points`` evenly spaced over the sample range).

    F_emp is the right-continuous empirical step function.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    g = np.linspace(x[0], x[-1], points) if grid is None else np.asarray(grid, dtype=float)
    emp = np.searchsorted(x, g, side="right") / x.size
    return DistanceCurve(g, np.abs(emp - _model_values(cdf, g)))
