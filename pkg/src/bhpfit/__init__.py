"""Data collapse of index return fluctuations onto the BHP distribution."""

__version__ = "0.1.0"

from .bhp import BhpTable, GridSpec, LatticeSpectrum, TruncatedDist, build_table, lattice_eigenvalues
from .errors import BhpFitError, NumericError, ParseError
from .fluctuation import FluctuationSet, normalize, rescale_stats
from .gof import DistanceCurve, KsResult, distance_curve, ks_pvalue, ks_statistic, ks_test
from .market_data import PriceFormat, PriceSeries, ReturnSeries, SignedReturns, compute_returns, parse_prices, split_by_sign
from .scan import ScanEntry, ScanResult, scan

__all__ = [
    "BhpFitError",
    "BhpTable",
    "DistanceCurve",
    "FluctuationSet",
    "GridSpec",
    "KsResult",
    "LatticeSpectrum",
    "NumericError",
    "ParseError",
    "PriceFormat",
    "PriceSeries",
    "ReturnSeries",
    "ScanEntry",
    "ScanResult",
    "SignedReturns",
    "TruncatedDist",
    "build_table",
    "compute_returns",
    "distance_curve",
    "ks_pvalue",
    "ks_statistic",
    "ks_test",
    "lattice_eigenvalues",
    "normalize",
    "parse_prices",
    "rescale_stats",
    "scan",
    "split_by_sign",
]
