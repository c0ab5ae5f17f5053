import math

import pytest
from hypothesis import given, settings, strategies as st

from anneal_lab.calibrate import (
    CalibrationPoint,
    DegenerateFitError,
    depth_for_ratio,
    fit_k,
    geometric_ratios,
    predicted_time,
    predicted_with_scaled_radius,
    relative_error,
    sweep_ratio_single,
)
from anneal_lab.landscape import SingleBasinGeometry, TwoBasinGeometry


def test_relative_error():
    assert relative_error(3, 2) == 0.5
    assert relative_error(1, 2) == 0.5


def test_scaling_with_unit_factor_is_identity():
    g = SingleBasinGeometry(40, 5, 1, 10)
    assert predicted_with_scaled_radius(g, 1.0) == predicted_time(g)


def test_scaled_prediction_grows_with_k():
    g = SingleBasinGeometry(40, 5, 1, 10)
    vals = [predicted_with_scaled_radius(g, k) for k in (1.0, 1.5, 2.0, 2.5)]
    assert vals == sorted(vals) and len(set(vals)) == 4


@given(st.floats(1.05, 2.9))
@settings(max_examples=30, deadline=None)
def test_fit_recovers_target_made_by_the_model(k):
    g = SingleBasinGeometry(40, 5, 1, 10)
    target = predicted_with_scaled_radius(g, k)
    k_hat = fit_k(g, target)
    # the fine grid has spacing 1e-4, so the match is good to that resolution
    assert predicted_with_scaled_radius(g, k_hat) == pytest.approx(target, rel=1e-3)


@pytest.mark.parametrize("target", [1.0, 900.0, 1e9])
def test_fit_is_no_worse_than_any_grid_point(target):
    # the prediction is a sawtooth in k (state count jumps, p drifts), so compare against the grid
    g = SingleBasinGeometry(40, 5, 1, 10)
    k_hat = fit_k(g, target)
    assert 1.0 <= k_hat <= 3.0
    best = relative_error(predicted_with_scaled_radius(g, k_hat), target)
    grid = [1.0 + 0.01 * j for j in range(201)]
    assert all(best <= relative_error(predicted_with_scaled_radius(g, k), target) + 1e-15
               for k in grid)


def test_fit_ties_go_to_smaller_k():
    # every k in [1, 1.02] rounds to the same chain, so the objective is flat there
    g = SingleBasinGeometry(20, 0, 1, 10)
    assert fit_k(g, predicted_time(g), (1.0, 1.02)) == 1.0


def test_fit_degenerate():
    g = SingleBasinGeometry(400, 4000, 1, 1)
    with pytest.raises(DegenerateFitError):
        fit_k(g, 1e6)


def test_fit_validates_inputs():
    g = SingleBasinGeometry(40, 5, 1, 10)
    with pytest.raises(ValueError):
        fit_k(g, -1)
    with pytest.raises(ValueError):
        fit_k(g, 10, (2.0, 1.0))


def test_two_basin_prediction_and_fit():
    g = TwoBasinGeometry(20, 5, 50, 10, 1, 10)
    target = predicted_with_scaled_radius(g, 1.7)
    assert predicted_with_scaled_radius(g, fit_k(g, target)) == pytest.approx(target, rel=1e-3)


def test_depth_for_ratio_roundtrip():
    d = depth_for_ratio(40, 10, 1, 25)
    assert SingleBasinGeometry(40, d, 1, 10).ratio == pytest.approx(25)


def test_geometric_ratios():
    r = geometric_ratios(5, 100, 4)
    assert r[0] == pytest.approx(5) and r[-1] == pytest.approx(100)
    assert r[1] / r[0] == pytest.approx(r[2] / r[1])


def test_point_from_measurement():
    g = SingleBasinGeometry(40, 4, 1, 10)
    pt = CalibrationPoint.from_measurement(g, 1.5 * predicted_time(g))
    assert pt.rel_error == pytest.approx(1 / 3)
    assert 1 < pt.k_opt < 3
    assert pt.scaled_error < pt.rel_error


@pytest.mark.slow
def test_sweep_is_seed_stable():
    base = SingleBasinGeometry(20, 1, 1, 10)
    a = sweep_ratio_single(base, [2.0, 4.0], 200, 3)
    b = sweep_ratio_single(base, [2.0, 4.0], 200, 3)
    assert a == b
    for pt in a:
        assert pt.timeouts == 0 and math.isfinite(pt.k_opt)
