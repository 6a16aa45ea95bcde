"""Deterministic SVG drawings of packings and their bond diagrams."""
from __future__ import annotations

from .analysis import BOND_THRESHOLD, contact_graph, find_rattlers
from .geometry import Packing

STYLES = ("disks", "bonds", "both")


def _f(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def render_svg(p: Packing, style: str = "both", labels: bool = False,
               threshold: float = BOND_THRESHOLD, size: int = 800) -> str:
    """SVG in disk-diameter units; jammed disks are shaded, rattlers are not.

    ``style`` is "disks" (circles only), "bonds" (bond segments only) or
    "both".  An empty packing draws just the container.
    """
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    scale = 1.0 / (2.0 * p.disk_radius)
    R = p.container_radius * scale
    r = 0.5
    pad = 0.05 * R
    half = R + pad
    stroke = _f(max(R / 400, 0.01))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_f(-half)} {_f(-half)} {_f(2 * half)} {_f(2 * half)}">',
        f'<circle cx="0" cy="0" r="{_f(R)}" fill="none" stroke="black" stroke-width="{stroke}"/>',
    ]
    if p.n:
        g = contact_graph(p, threshold)
        rattlers = find_rattlers(g)
        x = g.centers.copy()
        x[:, 1] *= -1  # y up
        if style in ("disks", "both"):
            out.append('<g id="disks" stroke="black" stroke-width="%s">' % stroke)
            for i, (cx, cy) in enumerate(x.tolist()):
                fill = "none" if i in rattlers else "#c8c8c8"
                out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}"/>')
            out.append("</g>")
        if style in ("bonds", "both"):
            out.append('<g id="bonds" stroke="black" stroke-width="%s">' % stroke)
            for i, j in g.pairs.tolist():
                out.append(f'<line x1="{_f(x[i, 0])}" y1="{_f(x[i, 1])}" '
                           f'x2="{_f(x[j, 0])}" y2="{_f(x[j, 1])}"/>')
            out.append("</g>")
        if labels:
            fs = _f(0.4)
            out.append(f'<g id="labels" font-size="{fs}" text-anchor="middle" '
                       'dominant-baseline="central" font-family="sans-serif">')
            for i, (cx, cy) in enumerate(x.tolist()):
                out.append(f'<text x="{_f(cx)}" y="{_f(cy)}">{i}</text>')
            out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
