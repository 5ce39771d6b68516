"""
JumpFPE - Oracles Module

可解析求解的对照问题：
- 纯跳跃问题 (b = σ = 0, g = u, ν = λδ_h) 的泊松级数解
- 带跳 OU 过程的均值与方差常微分方程的闭式解
- 热核方差
"""

from typing import Tuple

import numpy as np
from scipy import stats

from core.grid import GridDensity1D

SERIES_TAIL = 1e-12


def _poisson_terms(rate: float, tail: float) -> Tuple[np.ndarray, np.ndarray]:
    """k = 0..K 及其泊松概率，截断在尾部概率 < tail 处"""
    if rate == 0:
        return np.zeros(1, dtype=int), np.ones(1)
    k_max = int(stats.poisson.isf(tail, rate)) + 1
    k = np.arange(k_max + 1)
    return k, stats.poisson.pmf(k, rate)


def poisson_series_atoms(lam: float, T: float, shift: float, x0: float = 0.0,
                         tail: float = SERIES_TAIL) -> Tuple[np.ndarray, np.ndarray]:
    """X_T = x0 + shift·Poisson(λT) 的原子位置与概率"""
    k, p = _poisson_terms(lam * T, tail)
    return x0 + shift * k, p


def poisson_series_density(v0: GridDensity1D, lam: float, T: float, shift: float,
                           tail: float = SERIES_TAIL) -> np.ndarray:
    """v(T) = Σ_k e^{-λT}(λT)^k/k! · v0(· - k·shift)，平移用线性插值，越界部分丢弃"""
    grid = v0.grid
    centers = grid.centers
    k, p = _poisson_terms(lam * T, tail)
    out = np.zeros_like(v0.v)
    for kk, pk in zip(k, p):
        out += pk * np.interp(centers - kk * shift, centers, v0.v, left=0.0, right=0.0)
    return out


def ou_jump_mean(m0: float, theta: float, jump_rate: float, t: float) -> float:
    """m' = -θ m + γλh 的解；jump_rate = γ·∫u ν(du)"""
    if theta == 0:
        return m0 + jump_rate * t
    decay = np.exp(-theta * t)
    return float(m0 * decay + jump_rate / theta * (1.0 - decay))


def ou_jump_variance(var0: float, theta: float, sigma: float, jump_second_moment: float,
                     t: float) -> float:
    """V' = -2θV + σ² + γ²∫u²ν(du) 的解"""
    source = sigma**2 + jump_second_moment
    if theta == 0:
        return var0 + source * t
    decay = np.exp(-2.0 * theta * t)
    return float(var0 * decay + source / (2.0 * theta) * (1.0 - decay))


def heat_kernel_variance(var0: float, a: float, t: float) -> float:
    """∂_t v = a ∂_xx v 下方差线性增长：var0 + 2 a t"""
    return var0 + 2.0 * a * t
