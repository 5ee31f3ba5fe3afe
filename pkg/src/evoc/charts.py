"""Minimal self-contained SVG line charts.

Output is plain text with fixed number formatting, so identical data always
produces identical bytes.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
DASHES = ("", "6,4", "2,3", "8,3,2,3", "", "")

WIDTH, HEIGHT = 720, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 180, 36, 48


def _nice_step(span: float, target: int = 6) -> float:
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(
    series: Mapping[str, Sequence[float]],
    x: Sequence[float],
    title: str,
    y_label: str,
    x_label: str = "iteration",
    marker_x: float | None = None,
) -> str:
    """Render named series over a shared x axis as an SVG document."""
    ys = [v for s in series.values() for v in s]
    y_lo = min(0.0, min(ys)) if ys else 0.0
    y_hi = max(ys) if ys else 1.0
    y_step = _nice_step(y_hi - y_lo)
    y_hi = math.ceil(y_hi / y_step) * y_step if y_hi > y_lo else y_lo + y_step
    x_lo, x_hi = (min(x), max(x)) if len(x) else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v: float) -> float:
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return MARGIN_T + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    # axes and grid
    bottom, left = MARGIN_T + ph, MARGIN_L
    out.append(
        f'<path d="M{left},{MARGIN_T} V{bottom} H{left + pw}" stroke="black" fill="none"/>'
    )
    y = y_lo
    while y <= y_hi + 1e-9:
        yy = _fmt(py(y))
        out.append(f'<line x1="{left}" y1="{yy}" x2="{left + pw}" y2="{yy}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{yy}" text-anchor="end" dy="4">{y:g}</text>')
        y += y_step
    x_step = _nice_step(x_hi - x_lo, 10)
    xv = math.ceil(x_lo / x_step) * x_step
    while xv <= x_hi + 1e-9:
        xx = _fmt(px(xv))
        out.append(f'<line x1="{xx}" y1="{bottom}" x2="{xx}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{xx}" y="{bottom + 18}" text-anchor="middle">{xv:g}</text>')
        xv += x_step
    out.append(
        f'<text x="{left + pw / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.0f})">{escape(y_label)}</text>'
    )
    if marker_x is not None and x_lo <= marker_x <= x_hi:
        mx = _fmt(px(marker_x))
        out.append(
            f'<line x1="{mx}" y1="{MARGIN_T}" x2="{mx}" y2="{bottom}" stroke="#888" '
            f'stroke-dasharray="3,3"/>'
        )
    # series and legend
    for k, (name, values) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        dash = DASHES[k % len(DASHES)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, values))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"{dash_attr}/>'
        )
        ly = MARGIN_T + 16 + 20 * k
        lx = left + pw + 14
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
            f'stroke-width="1.8"{dash_attr}/>'
        )
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
