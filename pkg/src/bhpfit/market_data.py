"""
Daily price ingestion, relative returns and the sign split.

Prices arrive as delimiter-separated text with a date column and an
adjusted-close column. Consecutive rows are consecutive trading days;
calendar gaps (weekends, holidays) carry no meaning here.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ParseError

Sign = Literal["positive", "negative"]

CLOSE_COLUMN_CANDIDATES = ("adj close", "adj_close", "adjclose", "adjusted close", "adjusted_close", "close")
DATE_COLUMN_CANDIDATES = ("date", "day", "timestamp")
MISSING_TOKENS = frozenset({"", "null", "nan", "na", "n/a", "."})


@dataclass(frozen=True)
class PriceFormat:
    """How to read a price file.

    ``has_header=None`` sniffs the first row: it is a header when its close
    field does not parse as a number. Column selectors are names (matched
    case-insensitively) when the file has a header, otherwise 0-based indices.
    ``None`` selectors pick the usual Yahoo-style names, or columns 0 and 1
    for headerless files.
    """

    delimiter: str = ","
    date_column: str | int | None = None
    close_column: str | int | None = None
    date_format: str = "%Y-%m-%d"
    has_header: bool | None = None
    skip_missing: bool = False


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[date, ...]
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        if len(self.dates) != closes.shape[0]:
            raise ValueError("dates and closes differ in length")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise ParseError("non-positive or non-finite price")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ParseError("dates must be strictly increasing")
        closes.setflags(write=False)
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    dates: tuple[date, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class SignedReturns:
    """One sign's population of return magnitudes (all strictly positive)."""

    sign: Sign
    magnitudes: np.ndarray
    total_days: int
    dates: tuple[date, ...] = field(default=(), compare=False)

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=float)
        if mags.size and not np.all(mags > 0):
            raise ValueError("magnitudes must be strictly positive")
        mags.setflags(write=False)
        object.__setattr__(self, "magnitudes", mags)

    @property
    def count(self) -> int:
        return int(self.magnitudes.size)

    @property
    def fraction(self) -> float:
        return self.count / self.total_days if self.total_days else float("nan")


def _resolve_column(selector, header: list[str] | None, candidates, fallback: int, what: str) -> int:
    if header is None:
        if selector is None:
            return fallback
        if isinstance(selector, int):
            return selector
        if str(selector).isdigit():
            return int(selector)
        raise ParseError(f"{what} column {selector!r} given by name but the input has no header")
    lowered = [h.strip().lower() for h in header]
    if isinstance(selector, int):
        return selector
    names = candidates if selector is None else (str(selector).lower(),)
    for name in names:
        if name in lowered:
            return lowered.index(name)
    if selector is not None and str(selector).isdigit():
        return int(selector)
    raise ParseError(f"no {what} column among header fields {header}")


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_prices(text: str, fmt: PriceFormat | None = None) -> PriceSeries:
    """Parse delimiter-separated daily prices into a :class:`PriceSeries`.

    Rows are sorted by date. Raises :class:`ParseError` on an empty input,
    a malformed row (1-based line number in the message), a non-positive or
    non-finite price, or a repeated date.
    """
    fmt = fmt or PriceFormat()
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text), delimiter=fmt.delimiter), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty input")

    has_header = fmt.has_header
    if has_header is None:
        first = rows[0][1]
        probe = fmt.close_column if isinstance(fmt.close_column, int) else 1
        has_header = not (len(first) > probe and _looks_numeric(first[probe].strip()))
    header = rows[0][1] if has_header else None
    body = rows[1:] if has_header else rows
    date_col = _resolve_column(fmt.date_column, header, DATE_COLUMN_CANDIDATES, 0, "date")
    close_col = _resolve_column(fmt.close_column, header, CLOSE_COLUMN_CANDIDATES, 1, "close")

    parsed: dict[date, float] = {}
    for lineno, row in body:
        if len(row) <= max(date_col, close_col):
            raise ParseError(f"malformed row at line {lineno}: expected at least {max(date_col, close_col) + 1} fields")
        raw_date, raw_close = row[date_col].strip(), row[close_col].strip()
        if fmt.skip_missing and raw_close.lower() in MISSING_TOKENS:
            continue
        try:
            day = datetime.strptime(raw_date, fmt.date_format).date()
        except ValueError:
            raise ParseError(f"malformed row at line {lineno}: bad date {raw_date!r}") from None
        try:
            close = float(raw_close)
        except ValueError:
            raise ParseError(f"malformed row at line {lineno}: bad price {raw_close!r}") from None
        if not math.isfinite(close) or close <= 0:
            raise ParseError(f"non-positive price at line {lineno}: {raw_close}")
        if day in parsed:
            raise ParseError(f"duplicate date {day.isoformat()} at line {lineno}")
        parsed[day] = close

    if not parsed:
        raise ParseError("empty input: no price rows")
    days = sorted(parsed)
    return PriceSeries(tuple(days), np.array([parsed[d] for d in days]))


def read_prices(path: str | Path, fmt: PriceFormat | None = None) -> PriceSeries:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return parse_prices(fh.read(), fmt)


def compute_returns(prices: PriceSeries) -> ReturnSeries:
    """r(t) = (Y(t) - Y(t-1)) / Y(t-1), dated at day t."""
    if len(prices) < 2:
        raise ParseError(f"need at least 2 prices to form a return, got {len(prices)}")
    y = prices.closes
    return ReturnSeries(prices.dates[1:], (y[1:] - y[:-1]) / y[:-1])


def reconstruct_closes(first_close: float, returns: ReturnSeries) -> np.ndarray:
    return first_close * np.concatenate([[1.0], np.cumprod(1.0 + returns.values)])


def split_by_sign(returns: ReturnSeries) -> tuple[SignedReturns, SignedReturns]:
    """Strict partition into positive and negative populations; zero returns are dropped."""
    r = returns.values
    dates = np.array(returns.dates, dtype=object)
    pos, neg = r > 0, r < 0
    n = len(returns)
    return (
        SignedReturns("positive", r[pos], n, tuple(dates[pos])),
        SignedReturns("negative", -r[neg], n, tuple(dates[neg])),
    )


def format_prices_csv(dates, closes) -> str:
    lines = ["Date,Adj Close"]
    lines += [f"{d.isoformat()},{c:.17g}" for d, c in zip(dates, closes)]
    return "\n".join(lines) + "\n"
