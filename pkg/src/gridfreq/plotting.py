"""Minimal SVG line plots (polylines and a frame, no plotting library)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def line_plot(path: str | Path, t: np.ndarray, series: np.ndarray, title: str = "",
              width: int = 640, height: int = 360, max_points: int = 2000) -> None:
    t = np.asarray(t, dtype=float)
    series = np.atleast_2d(np.asarray(series, dtype=float).T).T
    stride = max(1, len(t) // max_points)
    t, series = t[::stride], series[::stride]
    pad = 40
    t0, t1 = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0
    finite = series[np.isfinite(series)]
    y0, y1 = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 1.0)
    if y1 <= y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    X = lambda v: pad + (v - t0) / (t1 - t0) * (width - 2 * pad)
    Y = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>',
           f'<text x="{width / 2:.0f}" y="{pad / 2:.0f}" text-anchor="middle" '
           f'font-size="14">{title}</text>',
           f'<text x="{pad}" y="{height - pad / 3:.0f}" font-size="11">{t0:.6g}</text>',
           f'<text x="{width - pad}" y="{height - pad / 3:.0f}" font-size="11" '
           f'text-anchor="end">{t1:.6g} s</text>',
           f'<text x="4" y="{pad + 4}" font-size="11">{y1:.3g}</text>',
           f'<text x="4" y="{height - pad}" font-size="11">{y0:.3g}</text>']
    for k in range(series.shape[1]):
        pts = " ".join(f"{X(a):.1f},{Y(b):.1f}" for a, b in zip(t, series[:, k]) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{PALETTE[k % len(PALETTE)]}" '
                   f'stroke-width="1" points="{pts}"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
