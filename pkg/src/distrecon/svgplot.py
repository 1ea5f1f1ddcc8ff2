"""Minimal deterministic SVG line plots for scan and trial results.

Output is a pure function of its inputs (fixed float formatting), so
repeated runs emit byte-identical files.
"""

from __future__ import annotations

import math


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def line_plot(curves, title="", xlabel="", ylabel="", logx=False,
              width=640, height=440, annotations=()):
    """Render labelled (x, y) curves as an SVG string.

    curves: list of (label, [(x, y), ...]).  Markers are drawn at each
    point; axes are linear, optionally log10 in x.
    """
    pad_l, pad_r, pad_t, pad_b = 70, 20, 40, 50
    pts_all = [(math.log10(x) if logx else x, y)
               for _, pts in curves for x, y in pts]
    if not pts_all:
        raise ValueError("no data to plot")
    xs = [p[0] for p in pts_all]
    ys = [p[1] for p in pts_all]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    sx = (width - pad_l - pad_r) / (x1 - x0)
    sy = (height - pad_t - pad_b) / (y1 - y0)

    def X(x):
        v = math.log10(x) if logx else x
        return pad_l + (v - x0) * sx

    def Y(y):
        return height - pad_b - (y - y0) * sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="15" y="{height // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {height // 2})">{ylabel}</text>',
        f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" '
        f'y2="{height - pad_b}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>',
    ]
    for k, (label, pts) in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{_fmt(X(x))},{_fmt(Y(y))}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{_fmt(X(x))}" cy="{_fmt(Y(y))}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{width - pad_r - 120}" y="{pad_t + 16 * (k + 1)}" '
                     f'font-size="12" fill="{color}">{label}</text>')
    for k, text in enumerate(annotations):
        parts.append(f'<text x="{pad_l + 10}" y="{pad_t + 16 * (k + 1)}" font-size="12">{text}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
