"""Static SVG pictures of tilings and frozen boundaries.

Lattice point ``(u, h)`` is drawn at ``(u + h/2, h * sqrt(3)/2)``.  With this
map the white cell ``(x, n)`` is the downward triangle
``(x, n), (x+1, n), (x+1, n-1)`` and the black cell ``(y, m)`` the upward one
``(y, m), (y+1, m), (y, m+1)``; each lozenge is their union.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

from .exact_kernel import LozengeType
from .limit_shape import frozen_boundary
from .oracle import ParticleArray, array_to_lozenges, check_array
from .polygon import LimitPolygon, PolygonSpec

SQ3 = math.sqrt(3) / 2
FILLS = {LozengeType.V: "#d9534f", LozengeType.S: "#5bc0de", LozengeType.L: "#f0ad4e"}
SVG_NS = "http://www.w3.org/2000/svg"


def to_plane(u: float, h: float) -> tuple[float, float]:
    return u + h / 2, h * SQ3


def lozenge_corners(x: int, n: int, kind: LozengeType) -> list[tuple[int, int]]:
    if kind is LozengeType.V:
        return [(x + 1, n - 1), (x + 1, n), (x, n + 1), (x, n)]
    if kind is LozengeType.S:
        return [(x, n - 1), (x + 1, n - 1), (x + 1, n), (x, n)]
    return [(x, n), (x + 1, n - 1), (x + 2, n - 1), (x + 1, n)]


def _document(points: list[tuple[float, float]], pad: float, unit: float) -> tuple[ET.Element, callable]:
    xs, ys = zip(*points)
    x0, x1, y0, y1 = min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad
    w, h = (x1 - x0) * unit, (y1 - y0) * unit
    root = ET.Element("svg", xmlns=SVG_NS, width=f"{w:.1f}", height=f"{h:.1f}", viewBox=f"0 0 {w:.3f} {h:.3f}")
    style = ET.SubElement(root, "style")
    style.text = " ".join(f"polygon.{t.value}{{fill:{c};stroke:#333;stroke-width:0.5}}" for t, c in FILLS.items())

    def px(p):  # flip vertically so that level N is on top
        return f"{(p[0] - x0) * unit:.3f},{(y1 - p[1]) * unit:.3f}"

    return root, px


def render_tiling(spec: PolygonSpec, arr: ParticleArray, unit: float = 20.0) -> str:
    """SVG with one ``<polygon class="V|S|L">`` per lozenge of the tiling.

    Lozenges of the frozen notches (the top-row particles among them) are
    drawn too, faded and tagged ``data-notch="1"``.
    """
    check_array(spec, arr)
    loz = array_to_lozenges(spec, arr)
    shapes = [(c, t, [to_plane(*q) for q in lozenge_corners(*c, t)]) for c, t in sorted(loz.items())]
    root, px = _document([p for *_, pts in shapes for p in pts], 0.5, unit)
    for c, t, pts in shapes:
        attrs = {"class": t.value, "points": " ".join(px(p) for p in pts)}
        if spec.in_notch(*c):
            attrs.update({"data-notch": "1", "opacity": "0.45"})
        ET.SubElement(root, "polygon", attrs)
    return ET.tostring(root, encoding="unicode")


def boundary_samples(lp: LimitPolygon, M: int) -> list[tuple[float, float, float]]:
    """``(w, chi, eta)`` at ``M`` parameters ``w = tan(theta)``, increasing in ``w``."""
    if M <= 0:
        return []
    out = []
    poles = np.array([*lp.af, *lp.bf])
    with np.errstate(all="ignore"):
        for th in np.linspace(-math.pi / 2, math.pi / 2, M + 2)[1:-1]:
            w = math.tan(th)
            if abs(w) > 1e4 or np.min(np.abs(poles - w)) < 1e-9:
                continue
            try:
                fb = frozen_boundary(lp, w)
            except (ValueError, ZeroDivisionError):
                continue
            if math.isfinite(fb.chi) and math.isfinite(fb.eta):
                out.append((w, fb.chi, fb.eta))
    return out


def render_frozen_boundary(lp: LimitPolygon, M: int = 400, unit: float = 200.0) -> str:
    """Polygon outline plus a polyline through ``M`` frozen-boundary samples."""
    outline = [to_plane(*v) for v in lp.vertices()]
    root, px = _document(outline, 0.05, unit)
    ET.SubElement(root, "polygon", {"class": "outline", "points": " ".join(px(p) for p in outline), "fill": "none", "stroke": "#000", "stroke-width": "1.5"})
    samples = boundary_samples(lp, M)
    if samples:
        pts = [to_plane(c, e) for _, c, e in samples]
        ET.SubElement(root, "polyline", {"class": "frozen-boundary", "points": " ".join(px(p) for p in pts), "fill": "none", "stroke": "#c00", "stroke-width": "1"})
    return ET.tostring(root, encoding="unicode")
