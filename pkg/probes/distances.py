"""
JumpFPE - Distances Module

一维 Wasserstein-1 距离：
- 两个经验分布之间（等样本量时用排序分位数耦合）
- 经验分布与网格密度之间（在合并断点集上精确积分 |F_emp - F_v|）
"""

import numpy as np
from scipy import stats

from core.errors import DimensionMismatchError, LeakedMassError
from core.grid import GridDensity1D
from core.laws import EmpiricalLaw

MAX_LEAK = 1e-3


def wasserstein1(a: EmpiricalLaw, b: EmpiricalLaw) -> float:
    """W1(A, B)，仅限一维"""
    if a.dim != 1 or b.dim != 1:
        raise DimensionMismatchError(f"wasserstein1 needs 1-D laws, got dims {a.dim} and {b.dim}")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a.samples) - np.sort(b.samples))))
    return float(stats.wasserstein_distance(a.samples, b.samples))


def _segment_abs_integral(d0: np.ndarray, d1: np.ndarray, h: np.ndarray) -> np.ndarray:
    """∫|d| 其中 d 在长度 h 的区间上从 d0 线性变到 d1"""
    same_sign = d0 * d1 >= 0
    total = np.abs(d0) + np.abs(d1)
    crossing = np.divide(d0**2 + d1**2, 2.0 * total, out=np.zeros_like(total), where=total > 0)
    return h * np.where(same_sign, 0.5 * np.abs(d0 + d1), crossing)


def w1_against_density(a: EmpiricalLaw, density: GridDensity1D) -> float:
    """
    ∫|F_emp(x) - F_v(x)| dx。

    F_v 在每个单元内线性（单元平均密度为常数），按网格总质量归一化；
    F_emp 在样本点之间为常数，所以在合并断点上逐段精确积分。
    """
    if a.dim != 1:
        raise DimensionMismatchError(f"w1_against_density needs a 1-D law, got dim {a.dim}")
    if density.mass < 1.0 - MAX_LEAK:
        raise LeakedMassError(
            f"grid density holds mass {density.mass:.6f} (leaked {density.leaked_mass:.3e}); "
            f"at most {MAX_LEAK} may be missing"
        )
    samples = np.sort(a.samples)
    edges = density.grid.edges
    cdf_edges = density.cdf_at_edges()

    points = np.unique(np.concatenate((samples, edges)))
    f_emp = np.searchsorted(samples, points[:-1], side="right") / samples.size
    f_v = np.interp(points, edges, cdf_edges, left=0.0, right=1.0)
    return float(np.sum(_segment_abs_integral(f_emp - f_v[:-1], f_emp - f_v[1:], np.diff(points))))
