import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from core.catalog import default_catalog  # noqa: E402
from generators.paths import simulate_ensemble  # noqa: E402


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def ou_problem(catalog):
    """ou_jump 的默认系数与高斯初值"""
    return catalog.get("ou_jump").build()


@pytest.fixture(scope="session")
def ou_ensemble(ou_problem):
    cs, mu0 = ou_problem
    return simulate_ensemble(cs, mu0, T=1.0, n_steps=50, N=20000, master_seed=12345)


@pytest.fixture
def base_config():
    """最小的 simulate 配置，测试里按需修改"""
    return {
        "experiment": "simulate",
        "problem": "zero",
        "params": {"s0": 1.0},
        "seed": 7,
        "settings": {"T": 1.0, "n_steps": 10, "N": 200},
    }
