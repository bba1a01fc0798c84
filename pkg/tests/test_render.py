import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.checks import HEXAGON
from lozenge.oracle import InconsistentArray, ParticleArray, enumerate_arrays
from lozenge.polygon import LimitPolygon, iter_small_specs
from lozenge.render import boundary_samples, render_frozen_boundary, render_tiling, to_plane

NS = {"s": "http://www.w3.org/2000/svg"}


def _polygons(svg, cls=None):
    root = ET.fromstring(svg)
    return [p for p in root.iter("{http://www.w3.org/2000/svg}polygon") if cls is None or p.get("class") == cls]


def test_to_plane():
    assert to_plane(0, 0) == (0, 0)
    x, y = to_plane(1, 2)
    assert x == 2 and y == pytest.approx(math.sqrt(3))


def test_tiny_tiling(tiny):
    arr = ParticleArray.from_list([[1], [2, 0]])
    svg = render_tiling(tiny, arr)
    assert len(_polygons(svg, "V")) == 3  # one particle on level 1, two on the top row
    assert all(p.get("data-notch") == "1" for p in _polygons(svg) if p.get("opacity"))


@settings(max_examples=25)
@given(st.sampled_from(list(iter_small_specs(4, max_gap=2))), st.data())
def test_v_count_and_well_formed(spec, data):
    arr = data.draw(st.sampled_from(list(enumerate_arrays(spec))))
    svg = render_tiling(spec, arr)
    polys = _polygons(svg)
    assert len(_polygons(svg, "V")) == spec.N * (spec.N + 1) // 2
    assert all(len(p.get("points").split()) == 4 for p in polys)
    # every white cell of the extended strip gets exactly one lozenge
    assert len(polys) == sum(len(spec.strip_cells(n)) for n in range(1, spec.N + 1))
    assert len([p for p in polys if p.get("data-notch") != "1"]) == len(spec.white_cells())


def test_render_rejects_bad_array(tiny):
    with pytest.raises(InconsistentArray):
        render_tiling(tiny, ParticleArray.from_list([[5], [2, 0]]))


def test_frozen_boundary_svg():
    svg = render_frozen_boundary(HEXAGON, 200)
    root = ET.fromstring(svg)
    assert len(_polygons(svg, "outline")) == 1
    lines = list(root.iter("{http://www.w3.org/2000/svg}polyline"))
    assert len(lines) == 1 and lines[0].get("class") == "frozen-boundary"


def test_frozen_boundary_no_samples():
    svg = render_frozen_boundary(HEXAGON, 0)
    assert len(_polygons(svg, "outline")) == 1
    assert not list(ET.fromstring(svg).iter("{http://www.w3.org/2000/svg}polyline"))
    assert boundary_samples(HEXAGON, 0) == []


def test_boundary_samples_in_polygon():
    pts = boundary_samples(HEXAGON, 400)
    assert len(pts) > 350
    ws = [w for w, _, _ in pts]
    assert ws == sorted(ws)
    for _, chi, eta in pts:
        assert -1e-9 <= eta <= 1 + 1e-9
        assert HEXAGON.contains(chi, eta, closed=True)


def test_boundary_closes_up():
    # the curve is one closed loop through w = infinity: both ends approach the same point
    pts = boundary_samples(HEXAGON, 2000)
    (_, c0, e0), (_, c1, e1) = pts[0], pts[-1]
    assert math.hypot(c0 - c1, e0 - e1) < 1e-2


def test_other_polygon_renders():
    lp = LimitPolygon.from_values(["-1", "0", "0.75"], ["-0.75", "0.5", "1"])
    assert len(boundary_samples(lp, 300)) > 250
    ET.fromstring(render_frozen_boundary(lp, 300))
