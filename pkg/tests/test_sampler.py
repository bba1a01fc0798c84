from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.checks import check_sampler_chisquare, check_sampler_exact
from lozenge.fluctuations import build_paths, moment_prop
from lozenge.oracle import check_array, empirical_moment, enumerate_arrays, interlacing_rows
from lozenge.polygon import PolygonSpec, iter_small_specs
from lozenge.sampler import (
    RowSampler,
    make_rng,
    mc_moments,
    sample,
    sample_batch,
    transition_probability,
)

SIX = PolygonSpec.from_values(3, ["-1/2", "7/2"], ["3/2", "9/2"])  # top row (4, 1, 0)


def test_tiny_transition(tiny):
    assert transition_probability((2, 0), (1,)) == Fraction(1, 2)
    assert transition_probability((2, 0), (2,)) == Fraction(1, 2)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=5, unique=True))
def test_transition_normalized(values):
    lam = tuple(sorted(values, reverse=True))
    assert sum(transition_probability(lam, mu) for mu in interlacing_rows(lam)) == 1


@settings(max_examples=50)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=5, unique=True), st.data())
def test_step_weights_nonnegative(values, data):
    rs = RowSampler(sorted(values, reverse=True))
    for _ in range(rs.d):
        rng, ws = rs.weights()
        assert all(w >= 0 for w in ws) and sum(ws) > 0
        rs.advance(data.draw(st.sampled_from([v for v, w in zip(rng, ws) if w])))


def test_exact_uniformity():
    specs = [s for s in iter_small_specs(4, max_gap=2)]
    res = check_sampler_exact(specs)
    assert res.ok, res.detail


def test_six_tiling_spec():
    assert len(list(enumerate_arrays(SIX))) == 6


@pytest.mark.slow
def test_chisquare_uniform():
    res = check_sampler_chisquare(SIX, n=100_000, seed=12345)
    assert res.ok, res.detail


def test_samples_valid(tiny):
    rng = make_rng(5)
    for spec in (tiny, SIX):
        for _ in range(20):
            check_array(spec, sample(spec, rng))


def test_reproducible():
    a = sample_batch(SIX, 300, seed=11)
    b = sample_batch(SIX, 300, seed=11)
    c = sample_batch(SIX, 300, seed=12)
    assert a.arrays == b.arrays
    assert a.arrays != c.arrays


def test_workers_do_not_change_samples():
    one = sample_batch(SIX, 2500, seed=3, workers=1)
    two = sample_batch(SIX, 2500, seed=3, workers=2)
    assert one.arrays == two.arrays


def test_mc_single_point_centered():
    est = mc_moments(SIX, [[(2, 1)]], 4000, seed=1)[0]
    assert abs(est.estimate) <= 4 * est.stderr


def test_mc_matches_oracle():
    pts = [(2, 1), (3, 2)]
    exact = empirical_moment(SIX, pts)
    assert exact == moment_prop(SIX, build_paths(SIX, [], anchors=pts))
    est = mc_moments(SIX, [pts], 8000, seed=2)[0]
    assert abs(est.estimate - float(exact)) <= 4 * est.stderr


def test_standard_error_scaling():
    pts = [[(2, 1), (3, 2)]]
    batch = sample_batch(SIX, 16000, seed=9)
    small = mc_moments(SIX, pts, 8000, 0, batch=batch)[0]
    big = mc_moments(SIX, pts, 16000, 0, batch=batch)[0]
    ratio = small.stderr / big.stderr
    assert abs(ratio / np.sqrt(2) - 1) < 0.2


def test_too_few_samples():
    with pytest.raises(ValueError):
        mc_moments(SIX, [[(1, 1)]], 50, seed=0)
