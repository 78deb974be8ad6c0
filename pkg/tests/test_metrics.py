import numpy as np
import pytest

from ffl3d import ball_phantom, make_grid, volume_metrics
from ffl3d.grids import Volume3D


def unit_grid(n=32):
    return make_grid(((-1, 1), (-1, 1), (-1, 1)), (n, n, n))


def test_metrics_identical_volumes():
    vol = ball_phantom(unit_grid(), (0, 0, 0), 0.4)
    m = volume_metrics(vol, vol)
    assert m["rmse"] == 0.0
    assert m["rel_l2"] == 0.0
    assert m["dice"] == 1.0


def test_metrics_zero_against_ball():
    grid = unit_grid()
    vol = ball_phantom(grid, (0, 0, 0), 0.4)
    zero = Volume3D(grid, np.zeros(grid.dims))
    m = volume_metrics(zero, vol)
    assert m["rel_l2"] == 1.0
    assert m["dice"] == 0.0
    assert m["rmse"] == pytest.approx(np.sqrt(np.mean(vol.values**2)), abs=1e-15)


def test_metrics_both_empty():
    grid = unit_grid(8)
    zero = Volume3D(grid, np.zeros(grid.dims))
    m = volume_metrics(zero, zero)
    assert m["dice"] == 1.0
    assert m["rel_l2"] == 0.0


def test_metrics_rel_l2_asymmetric_dice_symmetric():
    grid = unit_grid(16)
    a = ball_phantom(grid, (0, 0, 0), 0.5)
    b = Volume3D(grid, 2.0 * a.values)
    mab = volume_metrics(a, b)
    mba = volume_metrics(b, a)
    assert mab["dice"] == mba["dice"] == 1.0
    assert mab["rmse"] == mba["rmse"]
    assert mab["rel_l2"] == pytest.approx(0.5, abs=1e-12)
    assert mba["rel_l2"] == pytest.approx(1.0, abs=1e-12)


def test_metrics_threshold_ignores_low_values():
    grid = unit_grid(16)
    b = ball_phantom(grid, (0, 0, 0), 0.5)
    # add a faint halo below the 5% threshold: dice must stay 1
    a = Volume3D(grid, b.values + 0.04 * (1.0 - b.values))
    assert volume_metrics(a, b, 0.05)["dice"] == 1.0


def test_metrics_negative_values_are_background():
    grid = unit_grid(16)
    b = ball_phantom(grid, (0, 0, 0), 0.5)
    a = Volume3D(grid, b.values - 0.5 * (1.0 - b.values))
    assert volume_metrics(a, b, 0.05)["dice"] == 1.0


def test_metrics_offset_balls_dice():
    # two unit-radius balls whose centers are one radius apart: the lens
    # overlap volume is 5/16 of a ball, so Dice = 2*(5/16)/2 = 5/16
    grid = make_grid(((-2, 2), (-2, 2), (-2, 2)), (64, 64, 64))
    a = ball_phantom(grid, (-0.5, 0, 0), 1.0)
    b = ball_phantom(grid, (0.5, 0, 0), 1.0)
    m = volume_metrics(a, b)
    assert m["dice"] == pytest.approx(0.3125, abs=0.03)


def test_metrics_rejects_grid_mismatch():
    a = ball_phantom(unit_grid(8), (0, 0, 0), 0.5)
    b = ball_phantom(unit_grid(16), (0, 0, 0), 0.5)
    with pytest.raises(ValueError):
        volume_metrics(a, b)
