"""Minimal SVG line charts."""
from __future__ import annotations

import math
from pathlib import Path


def line_chart(x, y, title: str, path, width: int = 480, height: int = 300) -> None:
    pts = [(a, b) for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)]
    m = 40
    if not pts:
        pts = [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def sy(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
        f'<text x="{m}" y="{height - m + 15}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - m}" y="{height - m + 15}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{m - 4}" y="{m + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{poly}"/>',
        "</svg>",
    ]
    Path(path).write_text("\n".join(body) + "\n")
