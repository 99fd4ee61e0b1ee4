"""Command-line front end.

    bhpfit table     --lattice 10
    bhpfit analyze   --input prices.csv --out report/
    bhpfit synthetic --seed 7 --n 2500 --out synth/
    bhpfit report    --out report/          (re-render SVGs from the CSVs)

Settings resolve as built-in defaults < ``--config`` file < explicit flags.
The config file holds ``key = value`` lines using the flag names
(``alpha-min = 0.45``); ``#`` starts a comment.

Exit codes: 0 ok, 2 usage, 3 parse, 4 numeric, 5 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import __version__
from .bhp import CACHE_ENV_VAR, ORIENTATIONS, GridSpec, load_or_build_table
from .errors import BhpFitError, NumericError, ParseError
from .market_data import PriceFormat, compute_returns, format_prices_csv, read_prices, split_by_sign
from .report import SIGN_DIRS, analyze_sign, emit_report, file_digest
from .scan import synthetic_magnitudes

log = logging.getLogger("bhpfit")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _lattice(text) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid lattice size {text!r}") from None
    if value < 2:
        raise argparse.ArgumentTypeError(f"lattice size must be >= 2, got {value}")
    return value


def _positive_int(text) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _bins(text):
    text = str(text).strip()
    return int(text) if text.isdigit() else text


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"invalid boolean {text!r}")


def _column(text):
    text = str(text)
    return int(text) if text.isdigit() else text


DEFAULTS = {
    "input": None,
    "out": None,
    "alpha_min": 0.4,
    "alpha_max": 0.6,
    "alpha_step": 0.01,
    "lattice": 10,
    "orientation": "right-skew",
    "sign": "both",
    "bins": "fd",
    "seed": 7,
    "n": 2500,
    "true_alpha": 0.5,
    "delimiter": ",",
    "date_column": None,
    "close_column": None,
    "date_format": "%Y-%m-%d",
    "skip_missing": False,
    "svg": True,
    "workers": None,
}

CONVERTERS = {
    "input": str,
    "out": str,
    "alpha_min": float,
    "alpha_max": float,
    "alpha_step": float,
    "lattice": _lattice,
    "orientation": str,
    "sign": str,
    "bins": _bins,
    "seed": int,
    "n": _positive_int,
    "true_alpha": float,
    "delimiter": str,
    "date_column": _column,
    "close_column": _column,
    "date_format": str,
    "skip_missing": _bool,
    "svg": _bool,
    "workers": _positive_int,
}


def read_config(path) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise argparse.ArgumentTypeError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise argparse.ArgumentTypeError(f"{path}:{lineno}: unknown setting {key!r}")
            cfg[key] = CONVERTERS[key](value)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file; explicit flags override it")
    common.add_argument("--lattice", type=_lattice, default=S, help="BHP lattice side L, N = L*L (default 10)")
    common.add_argument("--orientation", choices=ORIENTATIONS, default=S, help="side of the long exponential tail (default right-skew)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--out", default=S, help="output directory for the report bundle")
    analysis.add_argument("--alpha-min", type=float, default=S, help="first alpha of the scan grid (default 0.4)")
    analysis.add_argument("--alpha-max", type=float, default=S, help="last alpha of the scan grid, inclusive (default 0.6)")
    analysis.add_argument("--alpha-step", type=float, default=S, help="scan grid spacing (default 0.01)")
    analysis.add_argument("--sign", choices=("pos", "neg", "both"), default=S, help="which return population(s) to analyse (default both)")
    analysis.add_argument("--bins", type=_bins, default=S, help="histogram bin count or numpy rule name (default fd)")
    analysis.add_argument("--no-svg", dest="svg", action="store_false", default=S, help="skip SVG figure rendering")
    analysis.add_argument("--workers", type=_positive_int, default=S, help="threads for the alpha scan")

    parser = argparse.ArgumentParser(prog="bhpfit", description="Fit alpha-rescaled return fluctuations to the BHP distribution.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{table,analyze,synthetic,report}")

    sub.add_parser(
        "table",
        parents=[common],
        help="build or load the cached BHP table",
        description=f"Build (or load from cache) the BHP table. Cache directory: ${CACHE_ENV_VAR} or ~/.cache/bhpfit.",
    )

    p = sub.add_parser("analyze", parents=[common, analysis], help="run the full analysis on a price file")
    p.add_argument("--input", default=S, help="delimiter-separated daily prices (date, adjusted close)")
    p.add_argument("--delimiter", default=S, help="field delimiter (default ',')")
    p.add_argument("--date-column", type=_column, default=S, help="date column name or 0-based index")
    p.add_argument("--close-column", type=_column, default=S, help="adjusted-close column name or 0-based index")
    p.add_argument("--date-format", default=S, help="strptime format of the date column (default %%Y-%%m-%%d)")
    p.add_argument("--skip-missing", action="store_const", const=True, default=S, help="skip rows whose price is empty or 'null'")

    p = sub.add_parser("synthetic", parents=[common, analysis], help="generate BHP-driven returns with known alpha and analyse them")
    p.add_argument("--seed", type=int, default=S, help="random seed (default 7)")
    p.add_argument("--n", type=_positive_int, default=S, help="returns per sign (default 2500)")
    p.add_argument("--true-alpha", type=float, default=S, help="alpha used to generate the returns (default 0.5)")

    p = sub.add_parser("report", parents=[common], help="re-render SVG figures from an existing bundle's CSVs")
    p.add_argument("--out", default=S, help="bundle directory")
    return parser


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg.update(read_config(args.config))
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
    for key in CONVERTERS:
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    if cfg["orientation"] not in ORIENTATIONS:
        parser.error(f"orientation must be one of {ORIENTATIONS}")
    if cfg["sign"] not in ("pos", "neg", "both"):
        parser.error("sign must be pos, neg or both")
    if not cfg["alpha_min"] < cfg["alpha_max"] or not cfg["alpha_step"] > 0:
        parser.error("need alpha-min < alpha-max and alpha-step > 0")
    if not (0 < cfg["alpha_min"] and cfg["alpha_max"] <= 2):
        parser.error("alpha range must lie within (0, 2]")
    return cfg


def _table(cfg):
    table, path, hit = load_or_build_table(cfg["lattice"], cfg["orientation"], GridSpec())
    return table, path, hit


def cmd_table(cfg) -> int:
    table, path, hit = _table(cfg)
    meta = table.metadata()
    mean, var = table.moments()
    print(f"table: {path} ({'cached' if hit else 'built'})")
    for key in ("L", "N", "eigenvalue_count", "eigenvalues", "orientation", "step", "x_max", "normalization_defect"):
        print(f"  {key}: {meta[key]}")
    print(f"  mean: {mean:.3e}  variance: {var:.9f}")
    return EXIT_OK


def run_analysis(cfg, input_path: Path, extra: dict | None = None) -> dict:
    if not cfg["out"]:
        raise UsageError("--out is required")
    fmt = PriceFormat(
        delimiter=cfg["delimiter"],
        date_column=cfg["date_column"],
        close_column=cfg["close_column"],
        date_format=cfg["date_format"],
        skip_missing=cfg["skip_missing"],
    )
    prices = read_prices(input_path, fmt)
    returns = compute_returns(prices)
    positive, negative = split_by_sign(returns)
    wanted = {"pos": ("positive",), "neg": ("negative",), "both": ("positive", "negative")}[cfg["sign"]]
    populations = {"positive": positive, "negative": negative}

    table, _, _ = _table(cfg)
    analyses = {}
    for sign in wanted:
        pop = populations[sign]
        if pop.count < 2:
            raise NumericError(f"{sign} population has {pop.count} members; need at least 2")
        log.info("scanning %s returns (n=%d)", sign, pop.count)
        analyses[sign] = analyze_sign(pop, table, cfg["alpha_min"], cfg["alpha_max"], cfg["alpha_step"], cfg["bins"], cfg["workers"])

    inputs = {
        "sha256": file_digest(input_path),
        "prices": len(prices),
        "returns": len(returns),
        "zero_returns": len(returns) - positive.count - negative.count,
        "first_date": prices.dates[0].isoformat(),
        "last_date": prices.dates[-1].isoformat(),
    }
    config = {k: cfg[k] for k in ("alpha_min", "alpha_max", "alpha_step", "lattice", "orientation", "sign", "bins")}
    summary = emit_report(cfg["out"], analyses, table, inputs=inputs, config=config, extra=extra, svg=cfg["svg"])
    for w in summary["warnings"]:
        log.warning(w)
    for sign, s in summary["signs"].items():
        print(f"{sign}: n={s['count']} alpha*={s['alpha_star']:.2f} p*={s['p_star']:.4f} D*={s['D_star']:.4f} A={s['A']:.4g} B={s['B']:.4g} C={s['C']:.4g}")
    return summary


def cmd_analyze(cfg) -> int:
    if not cfg["input"]:
        raise UsageError("--input is required")
    run_analysis(cfg, Path(cfg["input"]))
    return EXIT_OK


def _business_days(start: date, count: int) -> list[date]:
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def synthetic_prices(table, n: int, seed: int, alpha: float, start_price: float = 1000.0):
    """Price path whose positive and negative returns each number ``n`` and
    have truncated-BHP alpha-fluctuations at the given ``alpha``."""
    pos_seed, neg_seed, order_seed = np.random.SeedSequence(seed).spawn(3)
    up = synthetic_magnitudes(table, n, pos_seed, alpha)
    down = synthetic_magnitudes(table, n, neg_seed, alpha)
    if np.any(down >= 1):
        raise NumericError("synthetic negative return of -100% or worse; lower true alpha")
    signs = np.random.default_rng(order_seed).permutation(np.repeat([1.0, -1.0], n))
    r = np.empty(2 * n)
    r[signs > 0], r[signs < 0] = up, -down
    closes = start_price * np.concatenate([[1.0], np.cumprod(1.0 + r)])
    return _business_days(date(2000, 1, 3), closes.size), closes


def cmd_synthetic(cfg) -> int:
    if not cfg["out"]:
        raise UsageError("--out is required")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["n"] < 50:
        log.warning("n=%d is small; asymptotic KS p-values are unreliable", cfg["n"])
    table, _, _ = _table(cfg)
    dates, closes = synthetic_prices(table, cfg["n"], cfg["seed"], cfg["true_alpha"])
    path = out / "input.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_prices_csv(dates, closes))
    local = dict(cfg, delimiter=",", date_column=None, close_column=None, date_format="%Y-%m-%d", skip_missing=False)
    run_analysis(local, path, extra={"synthetic": {"seed": cfg["seed"], "n": cfg["n"], "true_alpha": cfg["true_alpha"]}})
    return EXIT_OK


def cmd_report(cfg) -> int:
    from .svg import render_sign_dir

    if not cfg["out"]:
        raise UsageError("--out is required")
    out = Path(cfg["out"])
    found = False
    for sign, sub in SIGN_DIRS.items():
        if (out / sub / "pcurve.csv").exists():
            for path in render_sign_dir(out / sub, sign):
                print(path)
            found = True
    if not found:
        raise FileNotFoundError(f"no report CSVs under {out}")
    return EXIT_OK


COMMANDS = {"table": cmd_table, "analyze": cmd_analyze, "synthetic": cmd_synthetic, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0) if isinstance(exc.code, int) or exc.code is None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"bhpfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"bhpfit: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericError, BhpFitError, ValueError, ArithmeticError) as exc:
        print(f"bhpfit: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"bhpfit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
