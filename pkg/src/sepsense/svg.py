"""Minimal SVG charts: line plots with an optional log-scale y axis, and
heatmaps for 2-D slices.  Output is standalone, valid XML."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=50)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def _fmt(v):
    return f"{v:.3g}"


def line_chart(path, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               log_y: bool = False) -> None:
    """Write a line chart; ``series`` maps a label to ``(x, y)`` arrays.

    On a log axis non-positive values are dropped from each series.
    """
    prepared = {}
    for label, (x, y) in series.items():
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if log_y:
            keep &= y > 0
        prepared[label] = (x[keep], np.log10(y[keep]) if log_y else y[keep])
    xs = np.concatenate([p[0] for p in prepared.values()] or [np.zeros(1)])
    ys = np.concatenate([p[1] for p in prepared.values()] or [np.zeros(1)])
    if xs.size == 0:
        xs, ys = np.zeros(1), np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    L, R, T, B = MARGIN["left"], MARGIN["right"], MARGIN["top"], MARGIN["bottom"]
    pw, ph = WIDTH - L - R, HEIGHT - T - B

    def sx(v):
        return L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return T + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _ticks(x0, x1):
        out.append(f'<text x="{sx(v):.1f}" y="{T + ph + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1):
        lab = f"1e{v:.1f}" if log_y else _fmt(v)
        out.append(f'<text x="{L - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{lab}</text>')
        out.append(f'<line x1="{L}" x2="{L + pw}" y1="{sy(v):.1f}" y2="{sy(v):.1f}" '
                   f'stroke="#ddd"/>')
    out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{L + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    ylab = escape(ylabel + (" (log10)" if log_y else ""))
    out.append(f'<text x="16" y="{T + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {T + ph / 2})">{ylab}</text>')
    for k, (label, (x, y)) in enumerate(prepared.items()):
        color = COLORS[k % len(COLORS)]
        if x.size:
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{L + pw - 6}" y="{T + 16 + 16 * k}" text-anchor="end" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _color(t):
    # white -> dark blue
    t = min(max(t, 0.0), 1.0)
    r = int(round(255 * (1 - t) + 8 * t))
    g = int(round(255 * (1 - t) + 48 * t))
    b = int(round(255 * (1 - t) + 107 * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(path, Z, extent=(-1.0, 1.0, -1.0, 1.0), title: str = "",
            xlabel: str = "", ylabel: str = "", vmin=None, vmax=None) -> None:
    """Heatmap of ``Z[iy, ix]`` over ``extent = (x0, x1, y0, y1)``."""
    Z = np.asarray(Z, dtype=float)
    vmin = float(np.nanmin(Z)) if vmin is None else vmin
    vmax = float(np.nanmax(Z)) if vmax is None else vmax
    span = vmax - vmin if vmax > vmin else 1.0
    ny, nx = Z.shape
    L, T = MARGIN["left"], MARGIN["top"]
    size = HEIGHT - T - MARGIN["bottom"]
    cw, ch = size / nx, size / ny
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{L + size / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for iy in range(ny):
        for ix in range(nx):
            x = L + ix * cw
            y = T + (ny - 1 - iy) * ch
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{ch + 0.05:.2f}" fill="{_color((Z[iy, ix] - vmin) / span)}"/>')
    out.append(f'<rect x="{L}" y="{T}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    x0, x1, y0, y1 = extent
    out.append(f'<text x="{L}" y="{T + size + 18}" text-anchor="middle">{_fmt(x0)}</text>')
    out.append(f'<text x="{L + size}" y="{T + size + 18}" text-anchor="middle">{_fmt(x1)}</text>')
    out.append(f'<text x="{L - 6}" y="{T + size}" text-anchor="end">{_fmt(y0)}</text>')
    out.append(f'<text x="{L - 6}" y="{T + 10}" text-anchor="end">{_fmt(y1)}</text>')
    out.append(f'<text x="{L + size / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{T + size / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {T + size / 2})">{escape(ylabel)}</text>')
    lx = L + size + 30
    out.append(f'<text x="{lx}" y="{T + 10}">max {_fmt(vmax)}</text>')
    out.append(f'<text x="{lx}" y="{T + size}">min {_fmt(vmin)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
