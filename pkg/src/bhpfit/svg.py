"""Minimal SVG line/step plots for the report figures.

The CSV curves are the canonical output; these renderings are a convenience
and are regenerated from the CSVs alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    kind: str = "line"  # line | step | points
    label: str = ""


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [round(first + i * step, 12) for i in range(int((hi - first) / step + 1e-9) + 1)]


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.6g}"


def plot(series: list[Series], title: str, xlabel: str, ylabel: str, logy: bool = False) -> str:
    pts = []
    for s in series:
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        if s.kind == "step":
            # x holds bin edges, y the densities
            x, y = np.repeat(x, 2)[1:-1], np.repeat(y, 2)
        keep = np.isfinite(x) & np.isfinite(y) & ((y > 0) if logy else True)
        x, y = x[keep], y[keep]
        if logy:
            y = np.log10(y)
        pts.append((s, x, y))

    allx = np.concatenate([p[1] for p in pts]) if pts else np.array([0.0, 1.0])
    ally = np.concatenate([p[2] for p in pts]) if pts else np.array([0.0, 1.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = (float(ally.min()), float(ally.max())) if logy else (min(0.0, float(ally.min())), float(ally.max()))
    if logy:
        y0 = max(y0, y1 - 8.0)
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + ph - (np.clip(v, y0, y1) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{_fmt_tick(t, False)}</text>')
    yticks = [float(v) for v in range(int(y0), int(y1) + 1)] if logy else _nice_ticks(y0, y1)
    for t in yticks:
        Y = sy(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt_tick(t, logy)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>'
    )

    for i, (s, x, y) in enumerate(pts):
        color = COLORS[i % len(COLORS)]
        if s.kind == "points":
            out += [f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>' for a, b in zip(x, y)]
        elif x.size:
            path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.label:
            ly = MARGIN["top"] + 16 + 16 * i
            lx = MARGIN["left"] + pw - 150
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 26}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _load(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


FIGURES = ("pcurve.svg", "dmap.svg", "fluct_lin.svg", "fluct_log.svg", "ret_lin.svg", "ret_log.svg")


def render_sign_dir(directory, sign: str) -> list[Path]:
    """Render the six figures of one sign from the CSVs in ``directory``."""
    d = Path(directory)
    pc = _load(d / "pcurve.csv")
    dm = _load(d / "dmap.csv")
    hf, of = _load(d / "hist_fluct.csv"), _load(d / "overlay_fluct.csv")
    hr, orr = _load(d / "hist_ret.csv"), _load(d / "overlay_ret.csv")

    def hist_series(h, label):
        return Series(np.append(h[:, 0], h[-1, 1]), h[:, 2], "step", label)

    figs = {
        "pcurve.svg": plot([Series(pc[:, 0], pc[:, 2], "line"), Series(pc[:, 0], pc[:, 2], "points")], f"KS p-value vs alpha ({sign})", "alpha", "p"),
        "dmap.svg": plot([Series(dm[:, 0], dm[:, 1])], f"|F_emp - F_BHP,trunc| ({sign})", "fluctuation", "D(x)"),
    }
    for suffix, logy in (("lin", False), ("log", True)):
        figs[f"fluct_{suffix}.svg"] = plot(
            [hist_series(hf, "histogram"), Series(of[:, 0], of[:, 1], label="truncated BHP")],
            f"alpha fluctuations ({sign})",
            "fluctuation",
            "density",
            logy,
        )
        figs[f"ret_{suffix}.svg"] = plot(
            [hist_series(hr, "histogram"), Series(orr[:, 0], orr[:, 1], label="return pdf")],
            f"return magnitudes ({sign})",
            "|r|",
            "density",
            logy,
        )
    written = []
    for name in FIGURES:
        path = d / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(figs[name])
        written.append(path)
    return written
