import pytest

from composers.convergence import (DENSITY_BOUND_NOTE, ConvergenceRow, ConvergenceTable, discrepancy_series,
                                   is_non_increasing, limit_experiment)
from generators.sequences import SequenceSpec


def _row(n, t, w1, noise=0.01, stderr=0.0):
    return ConvergenceRow(n=n, t=t, w1=w1, noise_floor=noise, stderr=stderr, mean=0.0, var=1.0)


def test_table_rejects_duplicates():
    table = ConvergenceTable()
    table.add(_row(1, 1.0, 0.5))
    with pytest.raises(ValueError):
        table.add(_row(1, 1.0, 0.4))


def test_table_checks():
    table = ConvergenceTable()
    for n, w1 in ((1, 0.5), (2, 0.2), (4, 0.025)):
        table.add(_row(n, 1.0, w1))
        table.add(_row(n, 0.5, w1 / 2))
    assert table.n_values == [1, 2, 4]
    assert table.checkpoints == [0.5, 1.0]
    assert table.within_noise(3.0)
    assert not table.within_noise(2.0)
    assert table.monotone_up_to_noise(1.0)
    assert [r["n"] for r in table.to_records()] == [1, 1, 2, 2, 4, 4]
    assert table.manifest()["n_rows"] == 6


def test_monotone_allows_noise_sized_rebounds():
    table = ConvergenceTable()
    table.add(_row(1, 1.0, 0.10))
    table.add(_row(2, 1.0, 0.12))
    assert table.monotone_up_to_noise(3.0)
    assert not table.monotone_up_to_noise(1.0)


def test_deterministic_target_falls_back_to_stderr():
    table = ConvergenceTable()
    table.add(_row(8, 1.0, 0.05, noise=0.0, stderr=0.02))
    assert table.within_noise(3.0)
    assert not table.within_noise(2.0)


def test_is_non_increasing():
    assert is_non_increasing([3.0, 2.0, 2.0, 0.5])
    assert not is_non_increasing([1.0, 1.1])
    assert is_non_increasing([])


def test_kill_both_converges_to_the_ode(catalog):
    cs, mu0 = catalog.get("cor39_ode").build({"lam": 0.0})
    spec = SequenceSpec(kind="kill-both", n_values=[1, 4, 16], base=cs)
    table = limit_experiment(spec, T=1.0, n_steps=50, N=2000, checkpoints=[0.5, 1.0], master_seed=5, mu0=mu0)
    assert all(r.noise_floor == 0.0 for r in table.rows)
    w1 = [r.w1 for r in table.series(1.0)]
    assert w1[0] > w1[1] > w1[2]
    assert table.monotone_up_to_noise(3.0)
    assert DENSITY_BOUND_NOTE in table.metadata["assumptions"]
    assert table.metadata["seeds"]["members"].keys() == {"1", "4", "16"}


def test_limit_experiment_is_reproducible(ou_problem):
    cs, mu0 = ou_problem
    spec = SequenceSpec(kind="kill-jumps", n_values=[1, 8], base=cs)
    kwargs = dict(T=0.5, n_steps=20, N=500, checkpoints=[0.5], master_seed=42, mu0=mu0)
    first = limit_experiment(spec, **kwargs)
    second = limit_experiment(spec, workers=2, **kwargs)
    assert first.to_records() == second.to_records()
    assert first.rows[0].noise_floor > 0


def test_limit_experiment_rejects_bad_checkpoints(ou_problem):
    cs, _ = ou_problem
    spec = SequenceSpec(kind="kill-jumps", n_values=[1], base=cs)
    with pytest.raises(ValueError):
        limit_experiment(spec, T=1.0, n_steps=5, N=10, checkpoints=[2.0], master_seed=0)
    with pytest.raises(ValueError):
        limit_experiment(spec, T=1.0, n_steps=5, N=10, checkpoints=[], master_seed=0)


def test_discrepancy_series_shrinks_under_mollification(catalog):
    cs, _ = catalog.get("rough_drift").build()
    spec = SequenceSpec(kind="mollify", n_values=[1, 4, 16], base=cs)
    series = discrepancy_series(spec, (-3.0, 3.0), (0.0, 1.0), 64)
    assert [n for n, _ in series] == [1, 4, 16]
    assert is_non_increasing([d for _, d in series])
