"""
BHP probability distribution from its characteristic-function integral.

The spin-wave magnetization of an L x L periodic lattice is a sum of
independent modes. Each mode k contributes the characteristic factor

    exp(-i x / (2 N lam_k)) * (1 - i x / (N lam_k)) ** -0.5

so the centred magnetization Y has the product of these as its
characteristic function, and variance S = sum(1 / lam_k**2) / (2 N**2).
The BHP density is the density of Y / sqrt(S).

The inverse Fourier integral is evaluated on a contour shifted off the real
axis by a per-point saddle-point tilt. The integrand is analytic for
Im z > -N * min(lam), so the shift is exact; it removes the cancellation
that otherwise swamps the far tails (the short tail falls below 1e-20 well
inside the fitted range). Integration uses composite Gauss-Legendre panels.
"""

from __future__ import annotations

import hashlib
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .errors import NumericError, ParseError

log = logging.getLogger(__name__)

Orientation = Literal["right-skew", "left-skew"]
ORIENTATIONS: tuple[str, ...] = ("right-skew", "left-skew")

TABLE_FORMAT_VERSION = 1
EIGENVALUE_RULE = "periodic-laplacian"
NORMALIZATION_BUDGET = 1e-3
CACHE_ENV_VAR = "BHPFIT_CACHE_DIR"

# log(N*min(lam) + tilt) is searched on this range; the upper end caps the
# tilt for points hugging the lower support bound (density there < 1e-60)
_LOG_SCALE_RANGE = (-30.0, 12.0)


@dataclass(frozen=True)
class LatticeSpectrum:
    L: int
    eigenvalues: np.ndarray

    @property
    def N(self) -> int:
        return self.L * self.L

    @property
    def variance_factor(self) -> float:
        """S = (1 / 2N^2) * sum 1/lam^2, the variance of the centred magnetization."""
        return float(np.sum(1.0 / self.eigenvalues**2) / (2.0 * self.N**2))

    @property
    def scaled(self) -> np.ndarray:
        """N * lam_k, the natural frequency scale of each mode."""
        return self.N * self.eigenvalues

    @property
    def support_min(self) -> float:
        """Lower end of the support of the normalized (right-skew) variable."""
        return float(-np.sum(0.5 / self.scaled) / np.sqrt(self.variance_factor))


def lattice_eigenvalues(L: int) -> LatticeSpectrum:
    """Nonzero spin-wave eigenvalues of the L x L periodic lattice Laplacian.

    lam = 4 - 2 cos(2 pi n1 / L) - 2 cos(2 pi n2 / L) over all Fourier modes
    (n1, n2) except the uniform one, giving N - 1 strictly positive values.
    """
    if int(L) != L or L < 2:
        raise ValueError(f"lattice size must be an integer >= 2, got {L}")
    L = int(L)
    k = 2.0 * np.pi * np.arange(L) / L
    lam = (4.0 - 2.0 * np.cos(k)[:, None] - 2.0 * np.cos(k)[None, :]).ravel()[1:]
    lam.setflags(write=False)
    return LatticeSpectrum(L, lam)


def characteristic_factor(x, spectrum: LatticeSpectrum):
    """Characteristic function of the centred magnetization at ``x``.

    Accepts real or complex arguments (complex ones must satisfy
    Im x > -N * min(lam)). For real x this is the product over modes of
    exp(-i x/(2 N lam) + (i/2) arctan(x/(N lam)) - (1/4) ln(1 + x^2/(N lam)^2)),
    written here through the principal branch of (1 - i x/(N lam))^(-1/2).
    """
    z = np.asarray(x, dtype=complex)
    t = z[..., None] / spectrum.scaled
    return np.exp(np.sum(-0.5j * t - 0.5 * np.log(1.0 - 1j * t), axis=-1))


def _relative_envelope_cutoff(scaled: np.ndarray, tilt: float, tol: float) -> float:
    """x at which |phi(x + i tilt)| / |phi(i tilt)| drops to ``tol``."""
    shifted = scaled + tilt

    def excess(x):
        return -0.25 * np.sum(np.log1p((x / shifted) ** 2)) - np.log(tol)

    hi = float(shifted.min())
    while excess(hi) > 0:
        hi *= 2.0
    return brentq(excess, 0.0, hi, xtol=1e-10 * hi)


def envelope_cutoff(spectrum: LatticeSpectrum, tol: float = 1e-12) -> float:
    """Real-axis truncation bound: prod (1 + x^2/(N lam)^2)^(-1/4) < tol beyond it."""
    return _relative_envelope_cutoff(spectrum.scaled, 0.0, tol)


def _saddle_log_scales(y: np.ndarray, scaled: np.ndarray) -> np.ndarray:
    """log(N min(lam) + tilt) placing the tilted mean of Y at y, by table lookup."""
    lo, hi = _LOG_SCALE_RANGE
    u = np.linspace(lo, hi, int((hi - lo) / 0.005) + 1)
    base = scaled - scaled.min()
    tilted_mean = np.sum(0.5 / (base[None, :] + np.exp(u)[:, None]), axis=1) - np.sum(0.5 / scaled)
    # tilted_mean decreases in u
    return np.interp(y, tilted_mean[::-1], u[::-1])


def bhp_density(
    y,
    spectrum: LatticeSpectrum,
    orientation: Orientation = "right-skew",
    *,
    panel_fraction: float = 0.25,
    x_max_factor: float = 1.0,
    envelope_tol: float = 1e-12,
    tilt_step: float = 0.25,
    nodes: int = 16,
    chunk: int = 256,
) -> np.ndarray:
    """Raw quadrature values of the unit-variance BHP density at ``y``.

    ``panel_fraction`` sets each Gauss-Legendre panel width as a fraction of
    the shortest length scale of the integrand; ``x_max_factor`` multiplies the
    envelope truncation bound. Halving the first and doubling the second is
    the refinement check. Points are grouped into tilt levels spaced
    ``tilt_step`` apart in log scale; any tilt is exact, the level only
    controls cancellation.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    y = np.asarray(y, dtype=float)
    w = y if orientation == "right-skew" else -y
    flat = w.ravel()
    out = np.zeros_like(flat)

    scaled = spectrum.scaled
    root_s = np.sqrt(spectrum.variance_factor)
    lower = -np.sum(0.5 / scaled)
    offset = flat * root_s - lower  # distance above the lower support bound, in Y units
    live = offset > 0
    if not live.any():
        return out.reshape(w.shape)

    levels = np.round(_saddle_log_scales(flat[live] * root_s, scaled) / tilt_step).astype(int)
    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes)
    live_idx = np.flatnonzero(live)
    for level in np.unique(levels):
        idx = live_idx[levels == level]
        tilt = float(np.exp(level * tilt_step) - scaled.min())
        d = offset[idx]
        x_max = _relative_envelope_cutoff(scaled, tilt, envelope_tol) * x_max_factor
        # shortest scale: envelope width or the oscillation period of exp(-i x d)
        panel = panel_fraction * min(scaled.min() + tilt, 2.0 * np.pi / d.max())
        n_panels = int(np.ceil(x_max / panel))
        xs = (np.arange(n_panels)[:, None] * panel + 0.5 * (gl_x + 1.0) * panel).ravel()
        ws = np.tile(0.5 * panel * gl_w, n_panels)
        log_mode = -0.5 * np.sum(np.log(1.0 - 1j * (xs[:, None] + 1j * tilt) / scaled), axis=1)
        for s in range(0, idx.size, chunk):
            dd = d[s : s + chunk, None]
            mag = np.exp(tilt * dd + log_mode.real)
            out[idx[s : s + chunk]] = (mag * np.cos(log_mode.imag - xs * dd)) @ ws
    out *= root_s / np.pi
    return out.reshape(w.shape)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for the right-skew table; left-skew tables use its mirror image."""

    start: float = -10.0
    stop: float = 12.0
    step: float = 0.002

    def __post_init__(self):
        if not (self.start <= -8.0 and self.stop >= 10.0):
            raise ValueError(f"grid [{self.start}, {self.stop}] must cover [-8, 10]")
        if not (0 < self.step <= 0.005):
            raise ValueError(f"grid step must be in (0, 0.005], got {self.step}")

    def points(self) -> np.ndarray:
        n = int(round((self.stop - self.start) / self.step)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class QuadratureInfo:
    x_max: float
    panel_fraction: float
    x_max_factor: float
    envelope_tol: float
    tilt_step: float
    nodes: int
    normalization_defect: float


@dataclass(frozen=True, eq=False)
class BhpTable:
    """Tabulated BHP pdf and cdf on a fixed grid.

    pdf values are the raw quadrature output; the cdf is their cumulative
    trapezoid divided by its final value, so ``cdf[-1] == 1``. Between grid
    points both are linearly interpolated; outside the grid pdf is 0 and the
    cdf clamps to 0 or 1.
    """

    orientation: Orientation
    grid: np.ndarray
    pdf_values: np.ndarray
    cdf_values: np.ndarray
    spectrum: LatticeSpectrum
    grid_spec: GridSpec
    quadrature: QuadratureInfo

    def __post_init__(self):
        for name in ("grid", "pdf_values", "cdf_values"):
            getattr(self, name).setflags(write=False)

    @property
    def L(self) -> int:
        return self.spectrum.L

    def pdf(self, x):
        return np.interp(x, self.grid, self.pdf_values, left=0.0, right=0.0)

    def cdf(self, x):
        return np.interp(x, self.grid, self.cdf_values, left=0.0, right=1.0)

    def _invert(self, p: np.ndarray) -> np.ndarray:
        c = self.cdf_values
        i = np.clip(np.searchsorted(c, p, side="right") - 1, 0, c.size - 2)
        lo, hi = c[i], c[i + 1]
        frac = np.where(hi > lo, (p - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
        return self.grid[i] + frac * (self.grid[i + 1] - self.grid[i])

    def quantile(self, p):
        """Inverse of the interpolated cdf; ``p`` must lie strictly inside (0, 1)."""
        arr = np.asarray(p, dtype=float)
        if np.any(~((arr > 0) & (arr < 1))):
            raise ValueError("quantile probabilities must lie in the open interval (0, 1)")
        out = self._invert(arr)
        return float(out) if out.ndim == 0 else out

    def sample(self, seed: int, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be positive")
        u = np.random.default_rng(seed).random(count)
        return self._invert(u)

    def moments(self) -> tuple[float, float]:
        g, f = self.grid, self.pdf_values
        mean = float(np.trapezoid(g * f, g))
        var = float(np.trapezoid((g - mean) ** 2 * f, g))
        return mean, var

    def truncate(self, lower: float, upper: float) -> TruncatedDist:
        return TruncatedDist(self, float(lower), float(upper))

    def metadata(self) -> dict:
        q = self.quadrature
        return {
            "version": TABLE_FORMAT_VERSION,
            "L": self.L,
            "N": self.spectrum.N,
            "eigenvalue_count": int(self.spectrum.eigenvalues.size),
            "eigenvalues": EIGENVALUE_RULE,
            "orientation": self.orientation,
            "start": self.grid_spec.start,
            "stop": self.grid_spec.stop,
            "step": self.grid_spec.step,
            "x_max": q.x_max,
            "panel_fraction": q.panel_fraction,
            "x_max_factor": q.x_max_factor,
            "envelope_tol": q.envelope_tol,
            "tilt_step": q.tilt_step,
            "nodes": q.nodes,
            "normalization_defect": q.normalization_defect,
        }


@dataclass(frozen=True)
class TruncatedDist:
    """The table restricted to [lower, upper] and renormalized by its mass there."""

    base: BhpTable
    lower: float
    upper: float
    mass: float = field(init=False)

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"degenerate truncation interval [{self.lower}, {self.upper}]")
        mass = float(self.base.cdf(self.upper) - self.base.cdf(self.lower))
        if mass < 1e-12:
            raise NumericError(f"vanishing probability mass {mass:.3g} on [{self.lower}, {self.upper}]")
        object.__setattr__(self, "mass", mass)

    def cdf(self, x):
        return np.clip((self.base.cdf(x) - self.base.cdf(self.lower)) / self.mass, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        out = np.where(inside, self.base.pdf(x) / self.mass, 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, seed: int, count: int) -> np.ndarray:
        lo, hi = self.base.cdf(self.lower), self.base.cdf(self.upper)
        u = np.random.default_rng(seed).random(count)
        return np.clip(self.base._invert(lo + (hi - lo) * u), self.lower, self.upper)


def build_table(
    L: int = 10,
    orientation: Orientation = "right-skew",
    grid: GridSpec | None = None,
    *,
    panel_fraction: float = 0.25,
    x_max_factor: float = 1.0,
    envelope_tol: float = 1e-12,
    tilt_step: float = 0.25,
    nodes: int = 16,
) -> BhpTable:
    """Tabulate the BHP pdf and cdf for an L x L lattice.

    Raises :class:`NumericError` when the raw trapezoid integral of the pdf
    misses 1 by more than 1e-3.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    grid = grid or GridSpec()
    spectrum = lattice_eigenvalues(L)
    points = grid.points()
    pdf = bhp_density(
        points,
        spectrum,
        "right-skew",
        panel_fraction=panel_fraction,
        x_max_factor=x_max_factor,
        envelope_tol=envelope_tol,
        tilt_step=tilt_step,
        nodes=nodes,
    )
    pdf = np.maximum(pdf, 0.0)
    if orientation == "left-skew":
        points, pdf = -points[::-1], pdf[::-1].copy()

    cum = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(points))])
    total = cum[-1]
    defect = float(total - 1.0)
    if not abs(defect) <= NORMALIZATION_BUDGET:
        raise NumericError(f"BHP quadrature normalization defect {defect:.3g} exceeds {NORMALIZATION_BUDGET}")
    info = QuadratureInfo(
        x_max=envelope_cutoff(spectrum, envelope_tol) * x_max_factor,
        panel_fraction=panel_fraction,
        x_max_factor=x_max_factor,
        envelope_tol=envelope_tol,
        tilt_step=tilt_step,
        nodes=nodes,
        normalization_defect=defect,
    )
    return BhpTable(orientation, points, pdf, cum / total, spectrum, grid, info)


# -- on-disk cache -----------------------------------------------------------


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "bhpfit"


def _cache_key(L, orientation, grid: GridSpec, quad: dict) -> str:
    parts = [f"v{TABLE_FORMAT_VERSION}", str(L), orientation, repr(grid.start), repr(grid.stop), repr(grid.step)]
    parts += [f"{k}={quad[k]!r}" for k in sorted(quad)]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def cache_path(L: int, orientation: Orientation, grid: GridSpec | None = None, cache_dir=None, **quad) -> Path:
    grid = grid or GridSpec()
    defaults = dict(panel_fraction=0.25, x_max_factor=1.0, envelope_tol=1e-12, tilt_step=0.25, nodes=16)
    defaults.update(quad)
    key = _cache_key(L, orientation, grid, defaults)
    return Path(cache_dir or default_cache_dir()) / f"bhp_L{L}_{orientation}_{key}.csv"


def save_table(table: BhpTable, path: str | Path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in table.metadata().items())
    lines = [f"# bhpfit-table {meta}", "x,pdf,cdf"]
    lines += [f"{x:.17g},{f:.17g},{c:.17g}" for x, f, c in zip(table.grid, table.pdf_values, table.cdf_values)]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_table(path: str | Path) -> BhpTable:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first.startswith("# bhpfit-table "):
        raise ParseError(f"{path} is not a BHP table file")
    meta = dict(item.split("=", 1) for item in first[len("# bhpfit-table ") :].split())
    if int(meta["version"]) != TABLE_FORMAT_VERSION:
        raise ParseError(f"unsupported table format version {meta['version']}")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    grid = GridSpec(float(meta["start"]), float(meta["stop"]), float(meta["step"]))
    info = QuadratureInfo(
        x_max=float(meta["x_max"]),
        panel_fraction=float(meta["panel_fraction"]),
        x_max_factor=float(meta["x_max_factor"]),
        envelope_tol=float(meta["envelope_tol"]),
        tilt_step=float(meta["tilt_step"]),
        nodes=int(meta["nodes"]),
        normalization_defect=float(meta["normalization_defect"]),
    )
    return BhpTable(
        meta["orientation"],
        np.ascontiguousarray(data[:, 0]),
        np.ascontiguousarray(data[:, 1]),
        np.ascontiguousarray(data[:, 2]),
        lattice_eigenvalues(int(meta["L"])),
        grid,
        info,
    )


def load_or_build_table(
    L: int = 10,
    orientation: Orientation = "right-skew",
    grid: GridSpec | None = None,
    cache_dir=None,
) -> tuple[BhpTable, Path, bool]:
    """Return ``(table, cache file, cache_hit)``, building and caching on a miss."""
    path = cache_path(L, orientation, grid, cache_dir)
    if path.exists():
        log.debug("BHP table cache hit: %s", path)
        return load_table(path), path, True
    log.info("building BHP table L=%d %s", L, orientation)
    table = build_table(L, orientation, grid)
    save_table(table, path)
    return table, path, False
