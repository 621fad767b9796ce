"""Minimal self-contained SVG line plots with confidence whiskers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

__all__ = ["SeriesPoint", "AxesSpec", "render_svg"]


@dataclass(frozen=True)
class SeriesPoint:
    x: float
    y: float
    lo: Optional[float] = None
    hi: Optional[float] = None


@dataclass(frozen=True)
class AxesSpec:
    xlabel: str = "x"
    ylabel: str = "y"
    title: str = ""
    log_x: bool = False
    width: int = 640
    height: int = 420


_MARGIN = (70, 30, 40, 60)  # left, right, top, bottom


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _label(v: float) -> str:
    return f"{v:.4g}"


def render_svg(series: Sequence[SeriesPoint], axes: AxesSpec = AxesSpec()) -> str:
    """Render one polyline through ``series`` (sorted by x) with CI whiskers."""
    pts = sorted(series, key=lambda p: p.x)
    if not pts:
        raise ValueError("cannot plot an empty series")
    if axes.log_x and any(p.x <= 0 for p in pts):
        raise ValueError("log-scale x needs positive values")
    tx = (lambda v: math.log10(v)) if axes.log_x else (lambda v: v)

    xs = [tx(p.x) for p in pts]
    ys = [p.y for p in pts] + [p.lo for p in pts if p.lo is not None] + [p.hi for p in pts if p.hi is not None]
    ys = [y for y in ys if math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    left, right, top, bottom = _MARGIN
    pw = axes.width - left - right
    ph = axes.height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{axes.width}" height="{axes.height}" '
        f'viewBox="0 0 {axes.width} {axes.height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{axes.width}" height="{axes.height}" fill="white"/>',
        f'<g class="axes" stroke="black" fill="none">'
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>'
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/></g>',
    ]
    for v in _ticks(x0, x1):
        label = _label(10 ** v) if axes.log_x else _label(v)
        out.append(f'<line x1="{_fmt(sx(v))}" y1="{top + ph}" x2="{_fmt(sx(v))}" y2="{top + ph + 5}" stroke="black"/>'
                   f'<text x="{_fmt(sx(v))}" y="{top + ph + 18}" text-anchor="middle">{label}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{_fmt(sy(v))}" x2="{left}" y2="{_fmt(sy(v))}" stroke="black"/>'
                   f'<text x="{left - 8}" y="{_fmt(sy(v) + 4)}" text-anchor="end">{_label(v)}</text>')
    xlabel = escape(axes.xlabel + (" (log scale)" if axes.log_x else ""))
    out.append(f'<text x="{left + pw / 2:.2f}" y="{axes.height - 15}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2:.2f})">{escape(axes.ylabel)}</text>')
    if axes.title:
        out.append(f'<text x="{axes.width / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(axes.title)}</text>')

    coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(p.y))}" for x, p in zip(xs, pts))
    out.append(f'<polyline class="series" fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{coords}"/>')
    for x, p in zip(xs, pts):
        if p.lo is not None and p.hi is not None and math.isfinite(p.lo) and math.isfinite(p.hi):
            cx = _fmt(sx(x))
            out.append(f'<g class="whisker" stroke="#1f5fa8">'
                       f'<line x1="{cx}" y1="{_fmt(sy(p.lo))}" x2="{cx}" y2="{_fmt(sy(p.hi))}"/>'
                       f'<line x1="{_fmt(sx(x) - 4)}" y1="{_fmt(sy(p.lo))}" x2="{_fmt(sx(x) + 4)}" y2="{_fmt(sy(p.lo))}"/>'
                       f'<line x1="{_fmt(sx(x) - 4)}" y1="{_fmt(sy(p.hi))}" x2="{_fmt(sx(x) + 4)}" y2="{_fmt(sy(p.hi))}"/></g>')
        out.append(f'<circle class="marker" cx="{_fmt(sx(x))}" cy="{_fmt(sy(p.y))}" r="3" fill="#1f5fa8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
