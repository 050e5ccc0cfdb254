"""Static SVG line plots on log-log axes, written without a plotting library.

Coordinates are rounded to fixed precision so identical data give
byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo: float, hi: float):
    return [10.0**k for k in range(math.floor(lo), math.ceil(hi) + 1)]


def loglog_plot(series: dict, title: str = "", xlabel: str = "x", ylabel: str = "y",
                width: int = 640, height: int = 420) -> str:
    """SVG text for ``{label: (xs, ys)}``; nonpositive points are dropped."""
    pts = {k: [(float(x), float(y)) for x, y in zip(*v) if x > 0 and y > 0 and math.isfinite(y)]
           for k, v in series.items()}
    allx = [math.log10(x) for p in pts.values() for x, _ in p] or [0.0, 1.0]
    ally = [math.log10(y) for p in pts.values() for _, y in p] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5
    ml, mr, mt, mb = 70, 150, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def X(lx):
        return ml + (lx - x0) / (x1 - x0) * pw

    def Y(ly):
        return mt + ph - (ly - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        lx = math.log10(t)
        if x0 - 1e-9 <= lx <= x1 + 1e-9:
            out.append(f'<line x1="{X(lx):.2f}" y1="{mt + ph}" x2="{X(lx):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X(lx):.2f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">{t:g}</text>')
    for t in _ticks(y0, y1):
        ly = math.log10(t)
        if y0 - 1e-9 <= ly <= y1 + 1e-9:
            out.append(f'<line x1="{ml - 5}" y1="{Y(ly):.2f}" x2="{ml}" y2="{Y(ly):.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{Y(ly) + 4:.2f}" text-anchor="end" font-size="11">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, p) in enumerate(pts.items()):
        col = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{X(math.log10(x)):.2f},{Y(math.log10(y)):.2f}" for x, y in p)
        out.append(f'<g class="series" data-label="{escape(label)}">')
        if len(p) > 1:
            out.append(f'<polyline points="{coords}" fill="none" stroke="{col}" stroke-width="2"/>')
        for x, y in p:
            out.append(f'<circle cx="{X(math.log10(x)):.2f}" cy="{Y(math.log10(y)):.2f}" r="3" fill="{col}"/>')
        out.append("</g>")
        ly = mt + 16 + 18 * i
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly}" x2="{ml + pw + 32}" y2="{ly}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 38}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_loglog(path, series: dict, **kw) -> Path:
    path = Path(path)
    path.write_text(loglog_plot(series, **kw))
    return path
