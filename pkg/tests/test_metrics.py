import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deplab.metrics import (
    CoverageGrid,
    action_correlation,
    coverage,
    max_offdiag,
    occupancy_entropy,
    psd_slope,
    workspace_grid,
)

from oracles import occupancy_expectation


def grid(n=30):
    return CoverageGrid(n, (0.0, 0.0), (1.0, 1.0))


def test_single_cell():
    assert coverage(np.full((50, 2), 0.51), grid()) == pytest.approx(1 / 900)


def test_raster_sweep_fills_the_grid():
    c = (np.arange(30) + 0.5) / 30
    pts = np.array([(x, y) for x in c for y in c])
    assert coverage(pts, grid()) == 1.0


def test_uniform_samples_match_occupancy_expectation():
    pts = np.random.default_rng(0).uniform(0, 1, (10_000, 2))
    expected = occupancy_expectation(900, 10_000)
    assert expected == pytest.approx(0.999985, abs=1e-6)
    assert abs(coverage(pts, grid()) - expected) <= 3 / 900


def test_edges_are_half_open_and_out_of_bounds_counted():
    g = grid(2)
    g.add(np.array([[0.5, 0.5], [1.0, 0.2], [-0.1, 0.3], [np.nan, 0.1]]))
    assert g.occupancy[1, 1] and g.occupancy.sum() == 1
    assert g.out_of_bounds == 3


def test_grid_validation():
    with pytest.raises(ValueError):
        CoverageGrid(1, (0, 0), (1, 1))
    with pytest.raises(ValueError):
        CoverageGrid(10, (0, 1), (1, 1))


points = arrays(float, st.tuples(st.integers(1, 60), st.just(2)), elements=st.floats(-0.2, 1.2))


@settings(max_examples=60)
@given(points, st.randoms(use_true_random=False))
def test_coverage_ignores_order_and_duplicates(pts, rnd):
    base = coverage(pts, grid(7))
    idx = list(range(len(pts)))
    rnd.shuffle(idx)
    assert coverage(pts[idx], grid(7)) == base
    assert coverage(np.vstack([pts, pts]), grid(7)) == base
    assert 0.0 <= base <= 1.0


@settings(max_examples=40)
@given(points, points)
def test_partial_grids_merge_by_union(a, b):
    whole = grid(5).add(np.vstack([a, b]))
    merged = grid(5).add(a).merge(grid(5).add(b))
    assert np.array_equal(whole.occupancy, merged.occupancy)
    assert whole.out_of_bounds == merged.out_of_bounds


def test_workspace_grid_spans_reach():
    g = workspace_grid(0.5)
    assert g.low == (-0.5, -0.5) and g.high == (0.5, 0.5) and g.n == 30


def test_correlation_of_duplicated_and_negated_channels():
    x = np.random.default_rng(0).standard_normal(500)
    m = action_correlation(np.column_stack([x, x, -x])).matrix
    assert m[0, 1] == pytest.approx(1.0) and m[0, 2] == pytest.approx(-1.0)
    assert np.allclose(np.diag(m), 1.0)


def test_constant_channel_is_flagged_not_nan():
    x = np.random.default_rng(0).standard_normal((100, 2))
    traj = np.column_stack([x, np.full(100, 0.3)])
    c = action_correlation(traj)
    assert not np.isnan(c.matrix).any()
    assert c.constant_channels.tolist() == [False, False, True]
    assert not c.matrix[2].any() and not c.matrix[:, 2].any()


def test_correlation_rejects_short_input():
    with pytest.raises(ValueError):
        action_correlation(np.zeros((1, 3)))


def test_white_channels_stay_below_fisher_bound():
    # 4/sqrt(T) is about 4 standard errors of a null correlation; 200 trials
    # with 15 pairs each should almost never cross it
    T = 10_000
    rng = np.random.default_rng(0)
    hits = sum(max_offdiag(action_correlation(rng.standard_normal((T, 6))).matrix) >= 4 / math.sqrt(T)
               for _ in range(200))
    assert hits <= 2


@settings(max_examples=40, deadline=None)
@given(arrays(float, (40, 3), elements=st.floats(-10, 10)),
       arrays(float, (3,), elements=st.floats(0.1, 10)), arrays(float, (3,), elements=st.floats(-5, 5)))
def test_correlation_invariant_under_positive_affine_maps(x, scale, shift):
    x = x + np.arange(40)[:, None] * np.array([0.01, -0.02, 0.03])  # keep channels non-constant
    a = action_correlation(x).matrix
    b = action_correlation(x * scale + shift).matrix
    assert np.allclose(a, b, atol=1e-8)
    assert np.allclose(a, a.T) and np.abs(a).max() <= 1.0


def test_psd_slope_validation():
    with pytest.raises(ValueError):
        psd_slope(np.zeros(100))
    with pytest.raises(ValueError):
        psd_slope(np.ones(1000))


def test_entropy_extremes():
    assert occupancy_entropy(np.full(100, 0.3), 10, [(0, 1)]) == 0.0
    x = (np.arange(1000) + 0.5) / 1000
    assert occupancy_entropy(x, 10, [(0, 1)]) == pytest.approx(math.log(10))
    with pytest.raises(ValueError):
        occupancy_entropy(np.array([]), 10)
    with pytest.raises(ValueError):
        occupancy_entropy(x, 1)


def test_uniform_entropy_approaches_maximum_from_below():
    rng = np.random.default_rng(0)
    ent = [occupancy_entropy(rng.uniform(0, 1, (m, 2)), 8, [(0, 1), (0, 1)]) for m in (100, 1000, 100_000)]
    assert ent[0] < ent[1] < ent[2] < math.log(64)
    assert math.log(64) - ent[2] < 1e-2


@settings(max_examples=60)
@given(arrays(float, st.tuples(st.integers(1, 200), st.just(2)), elements=st.floats(0, 1)),
       st.integers(2, 6))
def test_entropy_bounded_by_log_bins(x, bins):
    h = occupancy_entropy(x, bins, [(0, 1), (0, 1)])
    assert -1e-12 <= h <= math.log(bins**2) + 1e-12
