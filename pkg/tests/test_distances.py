import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from core.errors import DimensionMismatchError, LeakedMassError
from core.grid import Grid1D, GridDensity1D
from core.laws import EmpiricalLaw
from probes.distances import w1_against_density, wasserstein1

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40)


def _law(values):
    return EmpiricalLaw(samples=np.asarray(values, dtype=float))


def test_identical_laws_are_at_distance_zero():
    law = _law([0.3, -1.0, 2.5])
    assert wasserstein1(law, law) == 0.0


def test_shift():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1000)
    assert wasserstein1(_law(x), _law(x + 0.25)) == pytest.approx(0.25)


def test_unequal_sizes_use_scipy():
    a, b = [0.0, 1.0, 3.0], [0.5, 2.0]
    assert wasserstein1(_law(a), _law(b)) == pytest.approx(stats.wasserstein_distance(a, b))


def test_rejects_multivariate_laws():
    with pytest.raises(DimensionMismatchError):
        wasserstein1(EmpiricalLaw(samples=np.zeros((4, 2))), _law(np.zeros(4)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30).flatmap(lambda n: st.tuples(*[st.lists(st.floats(-100, 100), min_size=n, max_size=n)
                                                          for _ in range(3)])))
def test_metric_axioms(triple):
    a, b, c = (_law(v) for v in triple)
    ab = wasserstein1(a, b)
    assert ab >= 0
    assert ab == pytest.approx(wasserstein1(b, a), abs=1e-9)
    assert ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-9


@settings(max_examples=40, deadline=None)
@given(samples, samples)
def test_unequal_sizes_are_symmetric(a, b):
    assert wasserstein1(_law(a), _law(b)) == pytest.approx(wasserstein1(_law(b), _law(a)), abs=1e-9)


def test_point_mass_against_uniform_density():
    grid = Grid1D(-1.0, 1.0, 8)
    v = np.zeros(8)
    v[2:6] = 1.0
    density = GridDensity1D(grid=grid, v=v)
    assert w1_against_density(_law(np.zeros(10)), density) == pytest.approx(0.25)


def test_point_mass_against_single_cell():
    grid = Grid1D(0.0, 1.0, 10)
    v = np.zeros(10)
    v[4] = 10.0
    density = GridDensity1D(grid=grid, v=v)
    assert w1_against_density(_law([0.45, 0.45]), density) == pytest.approx(grid.dx / 4)


def test_density_against_its_own_samples():
    grid = Grid1D(-6.0, 6.0, 1200)
    cdf = stats.norm.cdf(grid.edges)
    density = GridDensity1D(grid=grid, v=np.diff(cdf) / grid.dx / (cdf[-1] - cdf[0]))
    rng = np.random.default_rng(1)
    law = _law(rng.standard_normal(20000))
    assert w1_against_density(law, density) < 0.03


def test_rejects_leaky_density():
    grid = Grid1D(0.0, 1.0, 10)
    density = GridDensity1D(grid=grid, v=np.full(10, 0.9), leaked_mass=0.1)
    with pytest.raises(LeakedMassError):
        w1_against_density(_law([0.5]), density)
