"""
Data-collapse products: histograms, the change-of-variable return pdf,
and the on-disk report bundle.

Bundle layout::

    <out>/summary.json
    <out>/pos/{pcurve,dmap,hist_fluct,overlay_fluct,hist_ret,overlay_ret}.csv (+ .svg figures)
    <out>/neg/...            same files for the negative population
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bhp import BhpTable, TruncatedDist
from .errors import NumericError
from .fluctuation import FluctuationSet, normalize
from .gof import DistanceCurve, distance_curve
from .market_data import SignedReturns
from .scan import ScanResult, scan

SIGN_DIRS = {"positive": "pos", "negative": "neg"}
OVERLAY_POINTS = 1001
SMALL_SAMPLE = 50
MAX_BINS = 1000
NOTES = (
    "A is computed as alpha/(sigma*mass). The DAX reference leading constants 5.58 (positive) "
    "and 4.79 (negative) are not reproduced by that formula; it gives roughly twice those values.",
)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    densities: np.ndarray

    @property
    def area(self) -> float:
        return float(np.sum(self.densities * np.diff(self.edges)))

    def to_csv(self) -> str:
        rows = ["left,right,density"]
        rows += [f"{a:.17g},{b:.17g},{d:.17g}" for a, b, d in zip(self.edges[:-1], self.edges[1:], self.densities)]
        return "\n".join(rows) + "\n"


def histogram(values, bins="fd", range=None) -> Histogram:
    """Area-normalized histogram. ``bins`` is a count or a numpy bin rule (default Freedman-Diaconis)."""
    v = np.asarray(values, dtype=float).ravel()
    if np.unique(v).size < 2:
        raise NumericError("histogram needs at least 2 distinct values")
    lo, hi = (v.min(), v.max()) if range is None else range
    if bins == "fd":
        bins = _fd_bins(v, lo, hi)
    dens, edges = np.histogram(v, bins=bins, range=(lo, hi), density=True)
    return Histogram(edges, dens)


def _fd_bins(v: np.ndarray, lo: float, hi: float) -> int:
    """Freedman-Diaconis bin count, falling back to Sturges when the width
    collapses (most values coincide) or gives more than MAX_BINS bins."""
    sturges = int(np.ceil(np.log2(v.size))) + 1
    q75, q25 = np.percentile(v, [75, 25])
    width = 2.0 * (q75 - q25) / np.cbrt(v.size)
    if not width > 0:
        return sturges
    n = np.ceil((hi - lo) / width)
    return int(max(n, 1)) if n <= MAX_BINS else sturges


def fluctuation_histogram(fl: FluctuationSet, bins="fd") -> Histogram:
    return histogram(fl.values, bins, (fl.lower, fl.upper))


@dataclass(frozen=True)
class ReturnPdfSpec:
    """f(x) = A x**(alpha-1) f_BHP(B x**alpha - C) on [support_lo, support_hi].

    A = alpha / (sigma * mass), B = 1/sigma, C = mu/sigma, where ``mass`` is
    the BHP probability of the fitted fluctuation range.
    """

    sign: str
    alpha: float
    mu: float
    sigma: float
    mass: float
    A: float
    B: float
    C: float
    support_lo: float
    support_hi: float


class ReturnPdf:
    """Density of return magnitudes implied by truncated-BHP fluctuations at one alpha."""

    def __init__(self, spec: ReturnPdfSpec, table: BhpTable):
        self.spec = spec
        self.table = table

    def __call__(self, x):
        s = self.spec
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x >= s.support_lo) & (x <= s.support_hi)
        xs = np.where(inside, x, 1.0)
        y = s.B * xs**s.alpha - s.C
        out = np.where(inside, s.A * xs ** (s.alpha - 1.0) * self.table.pdf(y), 0.0)
        return float(out) if out.ndim == 0 else out

    def fluctuation_of(self, x):
        """Fluctuation value y = (x**alpha - mu) / sigma for a return magnitude x."""
        return (np.asarray(x, dtype=float) ** self.spec.alpha - self.spec.mu) / self.spec.sigma

    def magnitude_of(self, y):
        """Inverse map: x = (sigma*y + mu)**(1/alpha)."""
        return (self.spec.sigma * np.asarray(y, dtype=float) + self.spec.mu) ** (1.0 / self.spec.alpha)


def return_pdf(alpha: float, mu: float, sigma: float, lower: float, upper: float, table: BhpTable, sign: str = "positive") -> ReturnPdf:
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    mass = table.truncate(lower, upper).mass
    lo_base, hi_base = sigma * lower + mu, sigma * upper + mu
    if hi_base <= 0:
        raise NumericError("return pdf support is empty")
    lo = lo_base ** (1.0 / alpha) if lo_base > 0 else 0.0
    hi = hi_base ** (1.0 / alpha)
    spec = ReturnPdfSpec(sign, alpha, mu, sigma, mass, alpha / (sigma * mass), 1.0 / sigma, mu / sigma, lo, hi)
    return ReturnPdf(spec, table)


@dataclass(frozen=True)
class SignAnalysis:
    population: SignedReturns
    scan: ScanResult
    fluctuations: FluctuationSet
    model: TruncatedDist
    distance: DistanceCurve
    fluct_hist: Histogram
    ret_pdf: ReturnPdf
    ret_hist: Histogram


def analyze_sign(
    population: SignedReturns,
    table: BhpTable,
    alpha_min: float = 0.4,
    alpha_max: float = 0.6,
    alpha_step: float = 0.01,
    bins="fd",
    workers: int | None = None,
) -> SignAnalysis:
    """Scan alpha, then build every collapse product at the optimum."""
    result = scan(population, table, alpha_min, alpha_max, alpha_step, workers)
    a = result.alpha_star
    fl = normalize(population.magnitudes, a, population.sign)
    model = table.truncate(fl.lower, fl.upper)
    rpdf = return_pdf(a, fl.mu, fl.sigma, fl.lower, fl.upper, table, population.sign)
    return SignAnalysis(
        population=population,
        scan=result,
        fluctuations=fl,
        model=model,
        distance=distance_curve(fl.values, model.cdf),
        fluct_hist=fluctuation_histogram(fl, bins),
        ret_pdf=rpdf,
        ret_hist=histogram(population.magnitudes, bins),
    )


# -- serialization -------------------------------------------------------------


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    s = f"{v:.17g}"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits.

    Parsing the output and dumping it again yields the same text.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _xy_csv(header: str, x, y) -> str:
    return "\n".join([header] + [f"{a:.17g},{b:.17g}" for a, b in zip(x, y)]) + "\n"


def sign_summary(an: SignAnalysis) -> dict:
    fl, spec, best = an.fluctuations, an.ret_pdf.spec, an.scan.best
    return {
        "count": an.population.count,
        "fraction": an.population.fraction,
        "alpha_star": best.alpha,
        "p_star": best.p,
        "D_star": best.D,
        "mu": fl.mu,
        "sigma": fl.sigma,
        "L": fl.lower,
        "R": fl.upper,
        "mass": an.model.mass,
        "A": spec.A,
        "B": spec.B,
        "C": spec.C,
        "alpha_over_sigma": spec.alpha / spec.sigma,
        "support": [spec.support_lo, spec.support_hi],
        "dmap_argmax": an.distance.argmax,
        "fluct_bins": int(an.fluct_hist.densities.size),
        "return_bins": int(an.ret_hist.densities.size),
    }


def sign_warnings(an: SignAnalysis) -> list[str]:
    out = []
    n = an.population.count
    if n < SMALL_SAMPLE:
        out.append(f"{an.population.sign}: n={n} is small; asymptotic KS p-values are unreliable")
    grid = [e.alpha for e in an.scan.entries]
    if an.scan.alpha_star in (grid[0], grid[-1]):
        out.append(f"{an.population.sign}: optimal alpha {an.scan.alpha_star} lies on the scan boundary")
    return out


def write_sign_files(an: SignAnalysis, directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    fl, spec = an.fluctuations, an.ret_pdf.spec
    xf = np.linspace(fl.lower, fl.upper, OVERLAY_POINTS)
    lo = spec.support_lo if spec.support_lo > 0 else spec.support_hi * 1e-6
    xr = np.linspace(lo, spec.support_hi, OVERLAY_POINTS)
    files = {
        "pcurve.csv": an.scan.to_csv(),
        "dmap.csv": an.distance.to_csv(),
        "hist_fluct.csv": an.fluct_hist.to_csv(),
        "overlay_fluct.csv": _xy_csv("x,pdf", xf, an.model.pdf(xf)),
        "hist_ret.csv": an.ret_hist.to_csv(),
        "overlay_ret.csv": _xy_csv("x,pdf", xr, an.ret_pdf(xr)),
    }
    written = []
    for name, text in files.items():
        path = directory / name
        _write(path, text)
        written.append(path)
    return written


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def emit_report(
    out_dir,
    analyses: dict[str, SignAnalysis],
    table: BhpTable,
    *,
    inputs: dict | None = None,
    config: dict | None = None,
    extra: dict | None = None,
    svg: bool = True,
) -> dict:
    """Write the bundle under ``out_dir`` and return the summary dict.

    Output is a pure function of the arguments: no timestamps, no absolute
    paths, so identical inputs give byte-identical files.
    """
    if not analyses:
        raise ValueError("no analyses to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings: list[str] = []
    signs = {}
    for sign, an in analyses.items():
        d = out / SIGN_DIRS[sign]
        write_sign_files(an, d)
        if svg:
            from .svg import render_sign_dir

            render_sign_dir(d, sign)
        signs[sign] = sign_summary(an)
        warnings += sign_warnings(an)
    summary = {
        "tool": {"name": "bhpfit", "version": __version__},
        "inputs": inputs or {},
        "config": config or {},
        "table": table.metadata(),
        "signs": signs,
        "warnings": warnings,
        "notes": list(NOTES),
    }
    if extra:
        summary.update(extra)
    _write(out / "summary.json", dumps(summary) + "\n")
    return summary
