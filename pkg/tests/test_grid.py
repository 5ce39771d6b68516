import numpy as np
import pytest

from core.grid import DensityTrajectory, Grid1D, GridDensity1D


def test_grid_geometry():
    grid = Grid1D(0.0, 1.0, 10)
    assert grid.dx == pytest.approx(0.1)
    assert grid.edges.shape == (11,)
    np.testing.assert_allclose(grid.centers[:2], [0.05, 0.15])
    assert grid.nearest_cell(0.26) == 2
    assert grid.nearest_cell(-5.0) == 0
    assert grid.nearest_cell(5.0) == 9


@pytest.mark.parametrize("args", [(1.0, 0.0, 10), (0.0, 1.0, 4)])
def test_grid_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        Grid1D(*args)


def test_uniform_density_moments():
    grid = Grid1D(0.0, 1.0, 10)
    density = GridDensity1D(grid=grid, v=np.ones(10))
    assert density.mass == pytest.approx(1.0)
    assert density.mean() == pytest.approx(0.5)
    assert density.variance() == pytest.approx(1 / 12)
    assert density.cdf_at_edges()[-1] == pytest.approx(1.0)
    assert density.is_conservative()


def test_conservation_counts_leak():
    grid = Grid1D(0.0, 1.0, 10)
    density = GridDensity1D(grid=grid, v=np.full(10, 0.9), leaked_mass=0.1)
    assert density.conservation_error() == pytest.approx(0.0, abs=1e-12)


def test_density_rejects_negative_or_misshaped():
    grid = Grid1D(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        GridDensity1D(grid=grid, v=-np.ones(10))
    with pytest.raises(ValueError):
        GridDensity1D(grid=grid, v=np.ones(9))


def test_trajectory_lookup():
    grid = Grid1D(0.0, 1.0, 10)
    trajectory = DensityTrajectory()
    for t in (0.0, 0.5):
        trajectory.append(GridDensity1D(grid=grid, v=np.ones(10), t=t))
    assert len(trajectory) == 2
    assert trajectory.at(0.5).t == 0.5
    with pytest.raises(KeyError):
        trajectory.at(0.25)
    manifest = trajectory.manifest()
    assert [row["t"] for row in manifest] == [0.0, 0.5]
    assert manifest[0]["first_moment"] == pytest.approx(0.5)


def test_windows_must_be_contiguous():
    trajectory = DensityTrajectory()
    trajectory.add_window(0.0, 0.25, np.ones(10))
    trajectory.add_window(0.25, 0.5, np.ones(10))
    assert trajectory.windows[1].midpoint == pytest.approx(0.375)
    with pytest.raises(ValueError):
        trajectory.add_window(0.75, 1.0, np.ones(10))
