"""Minimal deterministic SVG scatter plots of outlier clouds."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["scatter_svg", "write_scatter_svg"]

_SIZE = 480
_PAD = 24


def _bounds(points: np.ndarray, markers: np.ndarray, circles: Sequence[float]) -> tuple[float, float, float, float]:
    allpts = np.concatenate([points, markers]) if markers.size else points
    ext = [abs(r) for r in circles]
    if allpts.size == 0 and not ext:
        return -1.0, 1.0, -1.0, 1.0
    xs = list(allpts.real) + [-r for r in ext] + ext
    ys = list(allpts.imag) + [-r for r in ext] + ext
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-9) * 1.05
    cx, cy = (lo_x + hi_x) / 2, (lo_y + hi_y) / 2
    return cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2


def scatter_svg(
    points: Iterable[complex],
    markers: Iterable[complex] = (),
    circles: Sequence[float] = (),
    title: str = "",
) -> str:
    """Eigenvalues as dots, predicted limits as red crosses, ring radii as circles."""
    pts = np.asarray(list(points), dtype=complex)
    mk = np.asarray(list(markers), dtype=complex)
    x0, x1, y0, y1 = _bounds(pts, mk, circles)
    scale = (_SIZE - 2 * _PAD) / (x1 - x0)

    def px(z: complex) -> tuple[str, str]:
        return f"{_PAD + (z.real - x0) * scale:.2f}", f"{_PAD + (y1 - z.imag) * scale:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{_PAD}" y="{_PAD - 8}" font-size="12" font-family="sans-serif">{title}</text>')
    cx, cy = px(0j)
    for r in circles:
        out.append(f'<circle cx="{cx}" cy="{cy}" r="{r * scale:.2f}" fill="none" stroke="gray" stroke-dasharray="4 3"/>')
    for z in pts:
        x, y = px(z)
        out.append(f'<circle cx="{x}" cy="{y}" r="1.6" fill="#1f4fbf"/>')
    for z in mk:
        x, y = (float(v) for v in px(z))
        out.append(
            f'<path d="M{x - 5:.2f} {y - 5:.2f} L{x + 5:.2f} {y + 5:.2f} M{x - 5:.2f} {y + 5:.2f} '
            f'L{x + 5:.2f} {y - 5:.2f}" stroke="red" stroke-width="1.5"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter_svg(path: str | Path, points: Iterable[complex], markers: Iterable[complex] = (),
                      circles: Sequence[float] = (), title: str = "") -> None:
    Path(path).write_text(scatter_svg(points, markers, circles, title))
