import numpy as np
import pytest

from ffl3d import ball_phantom, cone_phantom, make_grid
from ffl3d.grids import Grid2D, Image2D, Volume3D


def test_grid_centers_match_formula():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (200, 200, 200))
    xs = grid.centers(0)
    assert grid.spacing[0] == 0.01
    assert xs[0] == -0.995
    assert xs[99] == pytest.approx(-0.005, abs=1e-16)
    # bitwise reproduction of x1 + (0.5 + i) * dx
    assert np.array_equal(xs, -1.0 + (0.5 + np.arange(200)) * 0.01)


def test_grid_single_cell():
    grid = make_grid(((0, 1), (0, 1), (0, 1)), (1, 1, 1))
    assert grid.centers(0)[0] == 0.5


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(((1, -1), (0, 1), (0, 1)), (4, 4, 4))
    with pytest.raises(ValueError):
        make_grid(((0, 1), (0, 1), (0, 1)), (0, 4, 4))


def test_volume_shape_mismatch():
    grid = make_grid(((0, 1), (0, 1), (0, 1)), (2, 3, 4))
    with pytest.raises(ValueError):
        Volume3D(grid, np.zeros((2, 3, 5)))


def test_image_shape_mismatch():
    g = Grid2D(((0, 1), (0, 1)), (4, 4))
    with pytest.raises(ValueError):
        Image2D(g, np.zeros((4, 5)))


def test_ball_phantom_indicator():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (32, 32, 32))
    vol = ball_phantom(grid, (0, 0, 0), 0.4)
    pts = grid.center_mesh()
    d = np.linalg.norm(pts, axis=-1)
    assert np.all(vol.values[d <= 0.39] == 1.0)
    assert np.all(vol.values[d >= 0.8] == 0.0)


def test_ball_phantom_volume():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (128, 128, 128))
    r = 0.5
    vol = ball_phantom(grid, (0, 0, 0), r)
    measured = vol.values.sum() * grid.cell_volume
    assert measured == pytest.approx(4.0 / 3.0 * np.pi * r**3, rel=0.02)


def test_cone_phantom_volume():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (128, 128, 128))
    vol = cone_phantom(grid, apex=(0.6, 0, 0), base_center=(-0.6, 0, 0), base_radius=0.45)
    measured = vol.values.sum() * grid.cell_volume
    assert measured == pytest.approx(np.pi / 3.0 * 0.45**2 * 1.2, rel=0.02)


def test_cone_phantom_apex_inclusive():
    # grid chosen so one cell center sits exactly on the apex
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (10, 10, 10))
    apex = (grid.centers(0)[8], grid.centers(1)[5], grid.centers(2)[5])
    vol = cone_phantom(grid, apex=apex, base_center=(-0.9, apex[1], apex[2]), base_radius=0.4)
    assert vol.values[8, 5, 5] == 1.0


def test_cone_phantom_outside_zero():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (16, 16, 16))
    vol = cone_phantom(grid)
    assert vol.values[0, 0, 0] == 0.0


def test_cone_phantom_degenerate_axis():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (4, 4, 4))
    with pytest.raises(ValueError):
        cone_phantom(grid, apex=(0, 0, 0), base_center=(0, 0, 0))
