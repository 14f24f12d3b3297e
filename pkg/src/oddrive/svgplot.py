"""Minimal static SVG 1.1 emitter for trajectory overlays.

Deterministic output: same inputs produce byte-identical SVG text.
"""

from __future__ import annotations

import math

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _nice_step(span: float) -> float:
    if span <= 0.0:
        return 1.0
    raw = span / 6.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12:
        out.append(0.0 if abs(v) < 1e-12 else v)
        v += step
    return out


def svg_plot(series, title: str = "", width: int = 640,
             height: int = 640) -> str:
    """Render labeled planar paths to SVG text.

    series: iterable of (label, xy) or (label, xy, dashed) with xy of shape
    (N, 2) in meters. Axes share an equal scale.
    """
    series = [(s[0], np.asarray(s[1], dtype=float), bool(s[2]) if len(s) > 2 else False)
              for s in series]
    margin = 60
    all_xy = np.vstack([xy for _, xy, _ in series if len(xy)])
    x_lo, y_lo = all_xy.min(axis=0)
    x_hi, y_hi = all_xy.max(axis=0)
    pad = 0.05 * max(x_hi - x_lo, y_hi - y_lo, 1e-9)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_lo, y_hi = y_lo - pad, y_hi + pad
    # equal aspect: widen the narrower span
    span = max(x_hi - x_lo, y_hi - y_lo)
    x_mid, y_mid = 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)
    x_lo, x_hi = x_mid - span / 2, x_mid + span / 2
    y_lo, y_hi = y_mid - span / 2, y_mid + span / 2
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin

    def px(x):
        return margin + (x - x_lo) / span * plot_w

    def py(y):
        return height - margin - (y - y_lo) / span * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333" stroke-width="1"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="15">{title}</text>')
    for tx in _ticks(x_lo, x_hi):
        if not x_lo <= tx <= x_hi:
            continue
        out.append(f'<line x1="{px(tx):.2f}" y1="{height - margin}" '
                   f'x2="{px(tx):.2f}" y2="{height - margin + 5}" '
                   f'stroke="#333"/>')
        out.append(f'<text x="{px(tx):.2f}" y="{height - margin + 18}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{tx:.2f}</text>')
    for ty in _ticks(y_lo, y_hi):
        if not y_lo <= ty <= y_hi:
            continue
        out.append(f'<line x1="{margin - 5}" y1="{py(ty):.2f}" '
                   f'x2="{margin}" y2="{py(ty):.2f}" stroke="#333"/>')
        out.append(f'<text x="{margin - 8}" y="{py(ty):.2f}" '
                   f'text-anchor="end" dominant-baseline="middle" '
                   f'font-family="sans-serif" font-size="11">{ty:.2f}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{height - 12}" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">x (m)</text>')
    out.append(f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 16 {height / 2:.1f})">y (m)</text>')

    for i, (label, xy, dashed) in enumerate(series):
        if len(xy) == 0:
            continue
        color = _COLORS[i % len(_COLORS)]
        step = max(1, len(xy) // 4000)  # keep files small on dense logs
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in xy[::step])
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = margin + 18 + 16 * i
        out.append(f'<line x1="{width - margin - 120}" y1="{ly}" '
                   f'x2="{width - margin - 90}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{width - margin - 84}" y="{ly + 4}" '
                   f'font-family="sans-serif" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, series, title: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_plot(series, title=title))
