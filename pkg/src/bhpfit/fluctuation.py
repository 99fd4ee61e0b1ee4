"""alpha-rescaled return statistics and normalized fluctuations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

ALPHA_MAX = 2.0


@dataclass(frozen=True)
class FluctuationSet:
    """Normalized alpha-rescaled magnitudes of one sign.

    ``values[i] = (m_i**alpha - mu) / sigma`` with population-convention
    moments, so the values have mean 0 and standard deviation 1.
    """

    sign: str
    alpha: float
    values: np.ndarray
    mu: float
    sigma: float

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def lower(self) -> float:
        return float(self.values.min())

    @property
    def upper(self) -> float:
        return float(self.values.max())

    @property
    def count(self) -> int:
        return int(self.values.size)


def _check(magnitudes, alpha: float) -> np.ndarray:
    m = np.asarray(magnitudes, dtype=float)
    if m.size == 0:
        raise NumericError("empty population")
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise ValueError("magnitudes must be finite and strictly positive")
    if not 0 < alpha <= ALPHA_MAX:
        raise ValueError(f"alpha must lie in (0, {ALPHA_MAX}], got {alpha}")
    return m


def rescale_stats(magnitudes, alpha: float) -> tuple[float, float]:
    """Mean and population standard deviation of ``magnitudes ** alpha``.

    sigma is computed in two passes (same quantity as
    sqrt(mean(m**(2 alpha)) - mu**2), without the cancellation).
    Raises :class:`NumericError` when sigma vanishes.
    """
    v = _check(magnitudes, alpha) ** alpha
    mu = float(v.mean())
    sigma = float(np.sqrt(np.mean((v - mu) ** 2)))
    if not sigma > 1e-14 * abs(mu):
        raise NumericError(f"degenerate population: standard deviation {sigma:.3g} at alpha={alpha}")
    return mu, sigma


def normalize(magnitudes, alpha: float, sign: str = "positive") -> FluctuationSet:
    v = _check(magnitudes, alpha) ** alpha
    mu, sigma = rescale_stats(magnitudes, alpha)
    return FluctuationSet(sign, float(alpha), (v - mu) / sigma, mu, sigma)
