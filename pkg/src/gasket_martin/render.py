"""SVG rendering of h_i on the gasket.

Cell triangles S_omega(T) for |omega| = depth are drawn with the corner
points S_omega(q_j) as vertex dots. The value at a vertex is h_i at the
boundary word omega j^inf, which depends only on the projected point.

Colour ramp: t = h / 3 clipped to [0, 1] and interpolated linearly in RGB
through the stops

    t = 0    #2c7bb6  (blue)
    t = 0.5  #ffffbf  (pale yellow)
    t = 1    #d7191c  (red)

Triangles take the colour of the mean of their three vertex values.
"""
from __future__ import annotations

from itertools import product

from .boundary import BoundaryPoint, harmonic_at_boundary
from .kernel import ChainParams
from .words import BoundaryWord, vertex_point

MAX_DEPTH = 8
SIZE = 600.0
MARGIN = 10.0
RAMP = ((0.0, (0x2C, 0x7B, 0xB6)), (0.5, (0xFF, 0xFF, 0xBF)), (1.0, (0xD7, 0x19, 0x1C)))


def ramp(value: float, vmax: float = 3.0) -> str:
    t = min(max(value / vmax, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(RAMP, RAMP[1:]):
        if t <= t1:
            s = (t - t0) / (t1 - t0)
            rgb = [round(a + s * (b - a)) for a, b in zip(c0, c1)]
            return "#" + "".join(f"{v:02x}" for v in rgb)
    return "#%02x%02x%02x" % RAMP[-1][1]


def _xy(pt) -> tuple[str, str]:
    x = MARGIN + SIZE * pt.x
    y = MARGIN + SIZE * (3**0.5 / 2 - pt.y)  # SVG y axis points down
    return f"{x:.3f}", f"{y:.3f}"


def vertex_values(params: ChainParams, i: int, depth: int, tol: float = 1e-10) -> dict:
    """h_i at every corner point of level ``depth``, keyed by (omega, j)."""
    cache: dict = {}
    out = {}
    for omega in product((1, 2, 3), repeat=depth):
        for j in (1, 2, 3):
            key = BoundaryPoint.of(BoundaryWord.make(omega, (j,)))
            if key not in cache:
                cache[key] = harmonic_at_boundary(params, i, key.representative, tol)
            out[omega, j] = cache[key]
    return out


def gasket_svg(params: ChainParams, depth: int, i: int = 1, tol: float = 1e-10) -> str:
    """SVG document with 3^depth triangles coloured by h_i."""
    if not 0 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must lie in [0, {MAX_DEPTH}]")
    if i not in (1, 2, 3):
        raise ValueError("i must be 1, 2 or 3")
    vals = vertex_values(params, i, depth, tol)
    w = SIZE + 2 * MARGIN
    h = SIZE * 3**0.5 / 2 + 2 * MARGIN
    r = max(0.5, 6.0 / 2**depth)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
        f'viewBox="0 0 {w:.3f} {h:.3f}">',
        f"<!-- h_{i}, depth {depth}, p {params.p}; ramp blue-yellow-red over [0, 3] -->",
        '<g stroke="#333333" stroke-width="0.2">',
    ]
    dots = {}
    for omega in product((1, 2, 3), repeat=depth):
        corners = [_xy(vertex_point(omega, j)) for j in (1, 2, 3)]
        v = [vals[omega, j] for j in (1, 2, 3)]
        pts = " ".join(f"{x},{y}" for x, y in corners)
        lines.append(f'<polygon points="{pts}" fill="{ramp(sum(v) / 3)}"/>')
        for c, val in zip(corners, v):
            dots.setdefault(c, val)
    lines.append("</g>")
    lines.append('<g stroke="none">')
    for (x, y), val in dots.items():
        lines.append(f'<circle cx="{x}" cy="{y}" r="{r:.3f}" fill="{ramp(val)}" '
                     f'data-h="{val:.12f}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
