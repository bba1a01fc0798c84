from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lozenge.checks import HEXAGON, check_moments, oracle_specs
from lozenge.exact_kernel import evaluator
from lozenge.fluctuations import (
    Horizontal,
    PathError,
    Vertical,
    anchor_of,
    build_paths,
    gff_gap_table,
    jog_path,
    mean_height,
    moment_prop,
    vertical_path,
)
from lozenge.limit_shape import FrozenPoint
from lozenge.oracle import empirical_mean_height, empirical_moment
from lozenge.polygon import PolygonSpec, iter_small_specs

SMALL = [s for s in iter_small_specs(4, max_gap=2) if s.N >= 3]
SIX = PolygonSpec.from_values(3, ["-1/2", "7/2"], ["3/2", "9/2"])


def _random_cells(spec):
    return [(x, n) for n in range(1, spec.N) for x in range(spec.left(n), spec.right)]


def _paths_or_skip(spec, pts):
    try:
        return build_paths(spec, [], anchors=pts)
    except PathError:
        assume(False)  # an anchor lies on another point's path


def test_mean_height_bottom(tiny):
    for x in range(tiny.left(0), tiny.right + 1):
        assert mean_height(tiny, x, 0) == 0


def test_mean_height_oracle_tiny(tiny):
    for n in range(tiny.N + 1):
        for x in range(tiny.left(n), tiny.right + 1):
            assert mean_height(tiny, x, n) == empirical_mean_height(tiny, x, n)


@pytest.mark.parametrize("spec", SMALL[:12], ids=str)
def test_mean_height_monotone_and_exact(spec):
    for x in range(spec.left(spec.N), spec.right + 1):
        prev = Fraction(0)
        for n in range(spec.N + 1):
            if x < spec.left(n):
                continue
            h = mean_height(spec, x, n)
            assert h >= prev
            assert h == empirical_mean_height(spec, x, n)
            prev = h


def test_mean_height_out_of_range(tiny):
    with pytest.raises(ValueError):
        mean_height(tiny, 0, 3)


def test_distinct_columns_are_vertical():
    spec = PolygonSpec.from_values(8, ["-15/2", "1/2"], ["-7/2", "9/2"])
    paths = build_paths(spec, [(0.1, 0.5), (0.3, 0.5)], lp=HEXAGON)
    assert all(len(p.segments) == 1 and isinstance(p.segments[0], Vertical) for p in paths)


def test_same_column_jogs():
    spec = PolygonSpec.from_values(8, ["-15/2", "1/2"], ["-7/2", "9/2"])
    paths = build_paths(spec, [], anchors=[(1, 3), (1, 6)])
    assert paths[0] == vertical_path(1, 3)
    assert sum(isinstance(s, Horizontal) for s in paths[1].segments) == 1
    assert paths[1] == jog_path(1, 6, 4, 1)
    cells = [{c[:2] for c in p.cells(spec)} for p in paths]
    assert not cells[0] & cells[1]


def test_duplicate_points_rejected(tiny):
    with pytest.raises(PathError):
        build_paths(tiny, [], anchors=[(1, 1), (1, 1)])


def test_tangency_column_rejected():
    spec = PolygonSpec.from_values(16, ["-31/2", "17/2"], ["-15/2", "33/2"])
    with pytest.raises(PathError):
        build_paths(spec, [(0.5, 0.4), (0.2, 0.5)], lp=HEXAGON)


def test_anchor_of():
    assert anchor_of(16, 0.25, 0.5) == (4, 8)
    assert anchor_of(10, 0.3, 0.7) == (3, 7)


def test_s1_is_zero():
    for x, n in _random_cells(SIX):
        assert moment_prop(SIX, [vertical_path(x, n)]) == 0


def test_s0_is_one(tiny):
    assert moment_prop(tiny, []) == 1


def test_vertical_pair_formula():
    # E (h1 - Eh1)(h2 - Eh2) = -sum_{m1, m2} K(x1,m1; x2+1,m2-1) K(x2,m2; x1+1,m1-1)
    for spec in SMALL[:8]:
        ev = evaluator(spec)
        cells = _random_cells(spec)
        for i, (x1, n1) in enumerate(cells):
            for x2, n2 in cells[i + 1 :]:
                if x1 == x2:
                    continue
                total = -sum(
                    ev.K(x1, m1, x2 + 1, m2 - 1) * ev.K(x2, m2, x1 + 1, m1 - 1)
                    for m1 in range(1, n1 + 1)
                    if spec.in_strip(x1, m1)
                    for m2 in range(1, n2 + 1)
                    if spec.in_strip(x2, m2)
                )
                expect = empirical_moment(spec, [(x1, n1), (x2, n2)])
                assert total == expect
                assert moment_prop(spec, [vertical_path(x1, n1), vertical_path(x2, n2)]) == expect


@settings(max_examples=40)
@given(st.sampled_from(SMALL), st.data())
def test_moment_matches_oracle(spec, data):
    cells = _random_cells(spec)
    pts = data.draw(st.lists(st.sampled_from(cells), min_size=2, max_size=3, unique=True))
    paths = _paths_or_skip(spec, pts)
    assert moment_prop(spec, paths) == empirical_moment(spec, pts)


@settings(max_examples=30)
@given(st.sampled_from(SMALL), st.data())
def test_moment_symmetric(spec, data):
    cells = _random_cells(spec)
    pts = data.draw(st.lists(st.sampled_from(cells), min_size=2, max_size=3, unique=True))
    paths = _paths_or_skip(spec, pts)
    perm = data.draw(st.permutations(range(len(paths))))
    assert moment_prop(spec, [paths[i] for i in perm]) == moment_prop(spec, paths)


def test_check_moments_small():
    res = check_moments(oracle_specs(4, 200))
    assert res.ok, res.detail


def test_gap_table_swap_symmetric():
    a = gff_gap_table(HEXAGON, [(0.1, 0.5), (0.3, 0.5)], [8, 16])
    b = gff_gap_table(HEXAGON, [(0.3, 0.5), (0.1, 0.5)], [8, 16])
    for ra, rb in zip(a, b):
        assert ra.moment == rb.moment
        assert ra.gff_prediction == pytest.approx(rb.gff_prediction, rel=1e-14)


def test_gap_table_odd_prediction():
    reps = gff_gap_table(HEXAGON, [(0.0, 0.5), (0.25, 0.6), (0.35, 0.4)], [8, 16])
    assert all(r.gff_prediction == 0 for r in reps)
    assert all(abs(r.scaled_moment) < 0.05 for r in reps)


def test_gap_table_pair_converges():
    reps = gff_gap_table(HEXAGON, [(0.1, 0.5), (0.3, 0.5)], [8, 32])
    assert reps[1].scaled_gap < reps[0].scaled_gap


def test_gap_table_rejects_frozen():
    with pytest.raises(FrozenPoint):
        gff_gap_table(HEXAGON, [(0.95, 0.03), (0.2, 0.5)], [8])
    with pytest.raises(ValueError):
        gff_gap_table(HEXAGON, [(0.1, 0.5), (0.3, 0.5)], [8], mode="bogus")
