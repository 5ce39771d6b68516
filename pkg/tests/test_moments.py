import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.grid import Grid1D, GridDensity1D
from generators.paths import simulate_ensemble
from probes.moments import LAMBDA_PLATEAU, lambda_moment, lambda_n_eval, moment_bound_check


def test_lambda_n_near_origin_is_rho():
    assert lambda_n_eval(1, 0.0) == pytest.approx(1.0)
    assert lambda_n_eval(5, 3.0) == pytest.approx(math.sqrt(10.0))


def test_lambda_n_plateau():
    assert lambda_n_eval(2, 100.0) == pytest.approx(2 * LAMBDA_PLATEAU)


def test_lambda_n_batch():
    x = np.array([[0.0], [1.0], [50.0]])
    out = lambda_n_eval(3, x)
    assert out.shape == (3,)
    assert out[2] == pytest.approx(4.5)


def test_lambda_n_rejects_zero():
    with pytest.raises(ValueError):
        lambda_n_eval(0, 1.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 50), st.floats(-1e3, 1e3))
def test_lambda_n_bounds_and_monotonicity(n, x):
    rho = math.sqrt(1.0 + x * x)
    value = lambda_n_eval(n, x)
    assert value <= rho + 1e-9
    assert value <= LAMBDA_PLATEAU * n + 1e-9
    assert value <= lambda_n_eval(n + 1, x) + 1e-9


def test_lambda_moment_of_concentrated_density():
    grid = Grid1D(-0.01, 0.01, 10)
    density = GridDensity1D(grid=grid, v=np.full(10, 50.0))
    assert lambda_moment(density, 1) == pytest.approx(1.0, abs=1e-4)


def test_bound_constants(ou_ensemble, ou_problem):
    cs, mu0 = ou_problem
    report = moment_bound_check(ou_ensemble, mu0.first_moment(), cs.C1, cs.C2, cs.nu.total_mass,
                                gamma=cs.jump_scale)
    assert report.C == pytest.approx(6.0 * (1.0 + 0.5))
    assert report.C * (report.t0 + math.sqrt(report.t0)) == pytest.approx(0.5)
    assert report.blocks == int(1.0 // report.t0)
    assert report.passed
    assert report.slack > 1.5
    assert report.n_paths == 20000


def test_constant_zero_process(catalog):
    cs, mu0 = catalog.get("zero").build()
    ensemble = simulate_ensemble(cs, mu0, T=1.0, n_steps=5, N=50, master_seed=0)
    report = moment_bound_check(ensemble, 0.0, cs.C1, cs.C2, 0.0)
    assert report.empirical == 0.0
    assert report.passed
    assert math.isinf(report.slack)
    assert set(report.to_dict()) >= {"bound", "empirical", "stderr"}


def test_bound_overflows_to_inf_not_nan(catalog):
    cs, mu0 = catalog.get("zero").build()
    ensemble = simulate_ensemble(cs, mu0, T=50.0, n_steps=5, N=20, master_seed=1)
    report = moment_bound_check(ensemble, 0.0, C1=200.0, C2=0.0, nuU=0.0)
    assert report.blocks + 1 >= 1024
    assert math.isinf(report.bound) and report.bound > 0
    assert report.passed
