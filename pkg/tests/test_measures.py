import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import CoefficientError
from core.measures import JumpList, MarkMeasure


def test_from_atoms_total_mass_and_probabilities():
    nu = MarkMeasure.from_atoms([(0.5, 1.0), (-1.0, 2.0)])
    assert nu.n_atoms == 2
    assert nu.mark_dim == 1
    assert nu.total_mass == pytest.approx(3.0)
    np.testing.assert_allclose(nu.probabilities, [1 / 3, 2 / 3])


def test_zero_measure():
    nu = MarkMeasure.zero()
    assert nu.n_atoms == 0
    assert nu.total_mass == 0.0
    assert nu.probabilities.size == 0
    np.testing.assert_array_equal(nu.mean_mark(), [0.0])


def test_dirac_with_zero_mass_is_zero_measure():
    nu = MarkMeasure.dirac(0.5, 0.0)
    assert nu.n_atoms == 0
    assert nu.total_mass == 0.0


def test_dirac_two_dimensional_mark():
    nu = MarkMeasure.dirac([0.5, 0.0], 2.0)
    assert nu.mark_dim == 2
    np.testing.assert_allclose(nu.mean_mark(), [1.0, 0.0])


def test_integral():
    nu = MarkMeasure.dirac(0.5, 2.0)
    assert nu.integral(lambda u: u[0] ** 2) == pytest.approx(0.5)


@pytest.mark.parametrize("weights", [[1.0, -1.0], [0.0], [np.inf]])
def test_rejects_bad_weights(weights):
    with pytest.raises(CoefficientError):
        MarkMeasure(marks=np.zeros((len(weights), 1)), weights=np.array(weights),
                    total_mass=float(np.sum(weights)))


def test_rejects_inconsistent_total_mass():
    with pytest.raises(CoefficientError):
        MarkMeasure(marks=np.array([[0.5]]), weights=np.array([1.0]), total_mass=1.5)


def test_rejects_nonzero_mass_without_atoms():
    with pytest.raises(CoefficientError):
        MarkMeasure(marks=np.zeros((0, 1)), weights=np.zeros(0), total_mass=1.0)


def test_rejects_count_mismatch():
    with pytest.raises(CoefficientError):
        MarkMeasure(marks=np.zeros((2, 1)), weights=np.array([1.0]), total_mass=1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(1e-3, 10)), min_size=1, max_size=8))
def test_probabilities_sum_to_one(atoms):
    nu = MarkMeasure.from_atoms(atoms)
    assert nu.total_mass == pytest.approx(sum(w for _, w in atoms), rel=1e-12)
    assert nu.probabilities.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(nu.probabilities > 0)


def test_jump_list_events():
    jumps = JumpList(times=np.array([0.1, 0.4]), atom_indices=np.array([0, 1]), horizon=1.0)
    assert len(jumps) == 2
    assert jumps.events == [(0.1, 0), (0.4, 1)]


def test_jump_list_rejects_unsorted_times():
    with pytest.raises(ValueError):
        JumpList(times=np.array([0.4, 0.1]), atom_indices=np.array([0, 0]), horizon=1.0)


def test_jump_list_rejects_times_beyond_horizon():
    with pytest.raises(ValueError):
        JumpList(times=np.array([0.5, 1.5]), atom_indices=np.array([0, 0]), horizon=1.0)
