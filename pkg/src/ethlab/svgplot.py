"""Minimal static SVG plots with byte-stable output.

Coordinates are rounded to two decimals and attributes are emitted in a
fixed order, so identical input data always yields identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

__all__ = ["PlotError", "histogram_svg", "line_svg", "plot_csv", "plot_histogram_csv"]

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class PlotError(ValueError):
    """Empty or malformed plot input."""


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.4g}"


def _range(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    return lo, hi


class _Frame:
    def __init__(self, xr, yr):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x: float) -> float:
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y: float) -> float:
        return MARGIN["top"] + (1 - (y - self.y0) / (self.y1 - self.y0)) * self.ph


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{escape(title)}</text>',
    ]


def _axes(f: _Frame, xlabel: str, ylabel: str, xticks: bool = True) -> list[str]:
    left, top = MARGIN["left"], MARGIN["top"]
    bottom = top + f.ph
    out = [
        f'<line x1="{left}" y1="{bottom}" x2="{left + f.pw}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for k in range(5):
        yv = f.y0 + k * (f.y1 - f.y0) / 4
        y = _fmt(f.py(yv))
        out.append(f'<line x1="{left - 4}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>')
        out.append(
            f'<text x="{left - 6}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle">{_tick(yv)}</text>'
        )
        if xticks:
            xv = f.x0 + k * (f.x1 - f.x0) / 4
            x = _fmt(f.px(xv))
            out.append(f'<line x1="{x}" y1="{bottom}" x2="{x}" y2="{bottom + 4}" stroke="black"/>')
            out.append(
                f'<text x="{x}" y="{bottom + 16}" font-family="sans-serif" font-size="11" '
                f'text-anchor="middle">{_tick(xv)}</text>'
            )
    out.append(
        f'<text x="{left + f.pw / 2:.2f}" y="{HEIGHT - 10}" font-family="sans-serif" font-size="12" '
        f'text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + f.ph / 2:.2f}" font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + f.ph / 2:.2f})">{escape(ylabel)}</text>'
    )
    return out


def line_svg(
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Line plot of one or more ``series`` against ``x``; a single point draws a marker."""
    x = [float(v) for v in x]
    if not x or not series:
        raise PlotError("nothing to plot")
    ys = {k: [float(v) for v in vals] for k, vals in series.items()}
    for name, vals in ys.items():
        if len(vals) != len(x):
            raise PlotError(f"series {name!r} has {len(vals)} points for {len(x)} x values")
    finite = [v for vals in ys.values() for v in vals if math.isfinite(v)]
    if not finite or not all(math.isfinite(v) for v in x):
        raise PlotError("no finite data")
    lo, hi = _range(finite)
    pad = 0.05 * (hi - lo)
    f = _Frame(_range(x), (lo - pad, hi + pad))
    out = _header(title) + _axes(f, xlabel, ylabel)
    for i, (name, vals) in enumerate(ys.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = [(f.px(a), f.py(b)) for a, b in zip(x, vals) if math.isfinite(b)]
        if len(pts) == 1:
            cx, cy = pts[0]
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4" fill="{color}"/>')
        elif pts:
            d = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 14 * i + 8
        lx = WIDTH - MARGIN["right"] - 150
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{lx + 24}" y="{ly}" font-family="sans-serif" font-size="11" '
            f'dominant-baseline="middle">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def histogram_svg(labels: Sequence[str], values: Sequence[float], title: str = "", ylabel: str = "probability") -> str:
    """Bar chart with one bar per label."""
    if not labels:
        raise PlotError("nothing to plot")
    if len(labels) != len(values):
        raise PlotError("labels and values differ in length")
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        raise PlotError("non-finite bar height")
    top = max(vals) if max(vals) > 0 else 1.0
    f = _Frame((0.0, float(len(labels))), (0.0, top * 1.1))
    out = _header(title) + _axes(f, "basis state", ylabel, xticks=False)
    bw = f.pw / len(labels)
    for i, (lab, v) in enumerate(zip(labels, vals)):
        x = f.px(i) + 0.1 * bw
        y = f.py(v)
        out.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(0.8 * bw)}" height="{_fmt(f.py(0) - y)}" fill="{PALETTE[0]}"/>'
        )
        if len(labels) <= 32:
            out.append(
                f'<text x="{_fmt(x + 0.4 * bw)}" y="{_fmt(f.py(0) + 14)}" font-family="monospace" font-size="10" '
                f'text-anchor="middle">{escape(lab)}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _read_rows(path: Path) -> tuple[list[str], list[dict]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            header = reader.fieldnames or []
    except (OSError, csv.Error) as exc:
        raise PlotError(f"cannot read {path}: {exc}") from exc
    if not header:
        raise PlotError(f"{path} has no header")
    if not rows:
        raise PlotError(f"{path} has no data rows")
    return header, rows


def _floats(rows: list[dict], col: str, path: Path) -> list[float]:
    try:
        return [float(r[col]) for r in rows]
    except (TypeError, ValueError, KeyError) as exc:
        raise PlotError(f"{path}: column {col!r} is not numeric") from exc


def plot_csv(
    path: str | Path,
    out: str | Path,
    x: str,
    ys: Sequence[str],
    title: str = "",
    ylabel: str = "",
) -> Path:
    """Render columns ``ys`` of a CSV against column ``x`` into ``out``."""
    path = Path(path)
    header, rows = _read_rows(path)
    missing = [c for c in (x, *ys) if c not in header]
    if missing:
        raise PlotError(f"{path}: missing columns {missing}")
    svg = line_svg(_floats(rows, x, path), {c: _floats(rows, c, path) for c in ys}, title, x, ylabel)
    out = Path(out)
    out.write_text(svg)
    return out


def plot_histogram_csv(path: str | Path, out: str | Path, time: float | None = None, title: str = "") -> Path:
    """Bar chart of a ``time,label,probability`` CSV at one recorded time (the last by default)."""
    path = Path(path)
    header, rows = _read_rows(path)
    for c in ("time", "label", "probability"):
        if c not in header:
            raise PlotError(f"{path}: missing column {c!r}")
    times = _floats(rows, "time", path)
    t = times[-1] if time is None else min(times, key=lambda v: abs(v - time))
    sel = [r for r, tv in zip(rows, times) if tv == t]
    svg = histogram_svg([r["label"] for r in sel], _floats(sel, "probability", path), title or f"t = {t:.4g}")
    out = Path(out)
    out.write_text(svg)
    return out
