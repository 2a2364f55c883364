"""Standalone SVG heatmaps for density grids.

Hand-rolled on purpose: no rendering dependency, deterministic output (fixed
float formatting, fixed attribute order), so emitted files are byte-stable
and diffable in review.  The singular line component, when present, is drawn
as an overlay on top of the continuous heat cells.
"""

from __future__ import annotations

import os

import numpy as np

from .densities import DensityGrid

# coarse viridis anchors, interpolated linearly in RGB
_VIRIDIS = np.array([
    (68, 1, 84), (71, 44, 122), (59, 81, 139), (44, 113, 142), (33, 144, 141),
    (39, 173, 129), (92, 200, 99), (170, 220, 50), (253, 231, 37),
], dtype=float)


def _color(v: float) -> str:
    v = min(max(v, 0.0), 1.0)
    x = v * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    f = x - i
    rgb = (1.0 - f) * _VIRIDIS[i] + f * _VIRIDIS[i + 1]
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _fmt(x: float) -> str:
    return "%.6g" % x


def svg_heatmap_string(grid: DensityGrid, title: str = "") -> str:
    """Render a DensityGrid as a self-contained SVG document string."""
    width, height = 640, 480
    x0, y0, x1p, y1p = 70.0, 30.0, 540.0, 440.0
    bar_x0, bar_x1 = 565.0, 590.0
    xi1, xi2, vals = grid.xi1, grid.xi2, grid.values
    vmax = float(vals.max()) if vals.size else 1.0
    if vmax <= 0:
        vmax = 1.0

    def sx(u):  # xi1 on the horizontal axis
        return x0 + (u - xi1[0]) / (xi1[-1] - xi1[0]) * (x1p - x0)

    def sy(u):  # xi2 on the vertical axis, increasing upward
        return y1p - (u - xi2[0]) / (xi2[-1] - xi2[0]) * (y1p - y0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<text x="{_fmt((x0 + x1p) / 2)}" y="20" font-size="14" '
                     f'text-anchor="middle" font-family="monospace">{title}</text>')
    # cell centers own [midpoint, midpoint] rectangles
    xe = np.concatenate([[xi1[0]], (xi1[1:] + xi1[:-1]) / 2.0, [xi1[-1]]])
    ye = np.concatenate([[xi2[0]], (xi2[1:] + xi2[:-1]) / 2.0, [xi2[-1]]])
    for i in range(len(xi1)):
        for j in range(len(xi2)):
            xa, xb = sx(xe[i]), sx(xe[i + 1])
            ya, yb = sy(ye[j + 1]), sy(ye[j])
            parts.append(
                f'<rect x="{_fmt(xa)}" y="{_fmt(ya)}" width="{_fmt(xb - xa)}" '
                f'height="{_fmt(yb - ya)}" fill="{_color(vals[i, j] / vmax)}"/>'
            )
    # axes frame and min/max labels
    parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1p - x0)}" '
                 f'height="{_fmt(y1p - y0)}" fill="none" stroke="#000000"/>')
    parts.append(f'<text x="{_fmt(x0)}" y="{_fmt(y1p + 16)}" font-size="11" '
                 f'font-family="monospace">{_fmt(xi1[0])}</text>')
    parts.append(f'<text x="{_fmt(x1p)}" y="{_fmt(y1p + 16)}" font-size="11" '
                 f'text-anchor="end" font-family="monospace">{_fmt(xi1[-1])}</text>')
    parts.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y1p)}" font-size="11" '
                 f'text-anchor="end" font-family="monospace">{_fmt(xi2[0])}</text>')
    parts.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y0 + 10)}" font-size="11" '
                 f'text-anchor="end" font-family="monospace">{_fmt(xi2[-1])}</text>')
    # vertical colorbar
    n_seg = 32
    for k in range(n_seg):
        ya = y1p - (k + 1) / n_seg * (y1p - y0)
        yb = y1p - k / n_seg * (y1p - y0)
        parts.append(f'<rect x="{_fmt(bar_x0)}" y="{_fmt(ya)}" width="{_fmt(bar_x1 - bar_x0)}" '
                     f'height="{_fmt(yb - ya)}" fill="{_color((k + 0.5) / n_seg)}"/>')
    parts.append(f'<rect x="{_fmt(bar_x0)}" y="{_fmt(y0)}" width="{_fmt(bar_x1 - bar_x0)}" '
                 f'height="{_fmt(y1p - y0)}" fill="none" stroke="#000000"/>')
    parts.append(f'<text x="{_fmt(bar_x1)}" y="{_fmt(y1p + 16)}" font-size="11" '
                 f'text-anchor="end" font-family="monospace">0</text>')
    parts.append(f'<text x="{_fmt(bar_x1 + 4)}" y="{_fmt(y0 + 10)}" font-size="11" '
                 f'font-family="monospace" text-anchor="end">{_fmt(vmax)}</text>')
    # singular line overlay
    if grid.atom is not None and grid.atom.mass > 0:
        a = grid.atom
        if a.axis == "x2" and xi2[0] <= a.location <= xi2[-1]:
            yy = sy(a.location)
            parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(yy)}" x2="{_fmt(x1p)}" y2="{_fmt(yy)}" '
                         f'stroke="#ff2222" stroke-width="2" stroke-dasharray="6,3"/>')
            parts.append(f'<text x="{_fmt(x1p - 4)}" y="{_fmt(yy - 5)}" font-size="11" fill="#ff2222" '
                         f'text-anchor="end" font-family="monospace">atom mass {_fmt(a.mass)}</text>')
        elif a.axis == "x1" and xi1[0] <= a.location <= xi1[-1]:
            xx = sx(a.location)
            parts.append(f'<line x1="{_fmt(xx)}" y1="{_fmt(y0)}" x2="{_fmt(xx)}" y2="{_fmt(y1p)}" '
                         f'stroke="#ff2222" stroke-width="2" stroke-dasharray="6,3"/>')
            parts.append(f'<text x="{_fmt(xx + 5)}" y="{_fmt(y0 + 12)}" font-size="11" fill="#ff2222" '
                         f'font-family="monospace">atom mass {_fmt(a.mass)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg_heatmap(grid: DensityGrid, path: str, title: str = "") -> str:
    """Write the heatmap SVG to `path`; byte-stable for fixed input."""
    text = svg_heatmap_string(grid, title)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed to write SVG heatmap to {path!r}: {exc}") from exc
    return text
