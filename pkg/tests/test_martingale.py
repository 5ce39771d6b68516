import numpy as np
import pytest

from core.errors import DimensionMismatchError
from core.test_functions import bump, constant_functional, path_functional_dictionary, sigmoid_product
from generators.paths import simulate_ensemble
from probes.martingale import DefectReport, _bracket_rows, martingale_defect, martingale_defects


def test_constant_process_has_no_defect(catalog):
    cs, mu0 = catalog.get("zero").build({"s0": 1.0})
    ensemble = simulate_ensemble(cs, mu0, T=1.0, n_steps=10, N=500, master_seed=3)
    for report in martingale_defects(ensemble, cs, bump(0.0, 1.0), path_functional_dictionary(0.5), 0.5, 1.0):
        assert report.estimate == 0.0
        assert report.stderr == 0.0
        assert report.within(3.0, 0.0)


def test_true_generator_passes(ou_ensemble, ou_problem):
    cs, _ = ou_problem
    chis = path_functional_dictionary(0.5)
    for phi in (bump(0.0, 1.5), bump(1.0, 1.0), bump(-0.5, 0.5)):
        for report in martingale_defects(ou_ensemble, cs, phi, chis, 0.5, 1.0):
            assert report.n_paths == 20000
            assert report.within(4.0, 0.01), report


def test_perturbed_generator_is_detected(ou_ensemble, ou_problem):
    cs, _ = ou_problem

    def drift(t, x):
        return cs.b(t, x) + 0.5

    wrong = cs.replace(drift=drift)
    report = martingale_defect(ou_ensemble, wrong, bump(1.0, 1.0), constant_functional(0.5), 0.5, 1.0)
    assert abs(report.estimate) > 3.0 * report.stderr


def test_single_and_batched_agree(ou_ensemble, ou_problem):
    cs, _ = ou_problem
    chi = sigmoid_product(0.5, [0.5], [0.0], [2.0])
    single = martingale_defect(ou_ensemble, cs, bump(0.0, 1.0), chi, 0.5, 1.0)
    batched = martingale_defects(ou_ensemble, cs, bump(0.0, 1.0), [constant_functional(0.5), chi], 0.5, 1.0)
    assert single == batched[1]
    assert isinstance(single, DefectReport)
    assert single.to_dict()["chi"] == chi.name


def test_window_validation(ou_ensemble, ou_problem):
    cs, _ = ou_problem
    phi = bump(0.0, 1.0)
    with pytest.raises(ValueError):
        martingale_defect(ou_ensemble, cs, phi, constant_functional(0.5), 0.5, 0.5)
    with pytest.raises(ValueError):
        martingale_defect(ou_ensemble, cs, phi, constant_functional(0.5), 0.5, 2.0)
    with pytest.raises(ValueError):
        martingale_defect(ou_ensemble, cs, phi, constant_functional(0.25), 0.5, 1.0)


def test_rejects_multivariate_ensemble(catalog):
    cs, mu0 = catalog.get("ou_jump_2d").build()
    ensemble = simulate_ensemble(cs, mu0, T=1.0, n_steps=5, N=20, master_seed=0)
    with pytest.raises(DimensionMismatchError):
        martingale_defect(ensemble, cs, bump(0.0, 1.0), constant_functional(0.5), 0.5, 1.0)


def test_report_within():
    report = DefectReport(estimate=0.02, stderr=0.005, n_paths=100, phi="p", chi="c", s=0.0, t=1.0)
    assert not report.within(3.0, 0.0)
    assert report.within(3.0, 0.01)
    assert np.isclose(report.to_dict()["estimate"], 0.02)


def test_brackets_are_computed_row_by_row(ou_problem):
    cs, mu0 = ou_problem
    ensemble = simulate_ensemble(cs, mu0, T=1.0, n_steps=100, N=9000, master_seed=21)
    rows = slice(0, 40)
    times, values, pre = ensemble.times[rows], ensemble.values[rows, :, 0], ensemble.pre_values[rows, :, 0]
    phi = bump(0.5, 1.0)
    batched = _bracket_rows(cs, phi, 0.25, 1.0, times, values, pre)
    single = [_bracket_rows(cs, phi, 0.25, 1.0, times[i:i + 1], values[i:i + 1], pre[i:i + 1])[0]
              for i in range(40)]
    np.testing.assert_allclose(batched, single, rtol=1e-12, atol=1e-14)


def test_wide_ensemble_defects_are_finite(ou_problem):
    cs, mu0 = ou_problem
    ensemble = simulate_ensemble(cs, mu0, T=1.0, n_steps=100, N=9000, master_seed=22)
    reports = martingale_defects(ensemble, cs, bump(0.0, 1.0), path_functional_dictionary(0.5), 0.5, 1.0)
    assert all(np.isfinite(r.estimate) and r.n_paths == 9000 for r in reports)
