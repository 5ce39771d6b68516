"""
JumpFPE - Moments Module

矩相关的工具：
- λ_n(x) = n·λ(ρ(x)/n)，ρ(x) = (1+|x|^2)^{1/2}：截断的一阶矩泛函
- 最大值一阶矩估计 E sup_{t<=T}|X_t| <= 2^{[T/t0]+1} μ0(|·|) + 2^{[T/t0]+1} - 1 的检验
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from core.grid import GridDensity1D
from generators.paths import PathEnsemble

logger = logging.getLogger(__name__)

# λ 在 [2, ∞) 上的平台值：1 + ∫_1^2 (1 + cos(π(r-1)))/2 dr
LAMBDA_PLATEAU = 1.5
# 一阶矩 BDG 不等式使用的常数
KAPPA_BDG = 6.0


def _lambda(r: np.ndarray) -> np.ndarray:
    """凹、递增、C^1 且导数 Lipschitz：[0,1] 上为 r，[2,∞) 上为 1.5"""
    r = np.asarray(r, dtype=float)
    transition = 1.0 + 0.5 * (r - 1.0) + np.sin(np.pi * (r - 1.0)) / (2.0 * np.pi)
    return np.where(r <= 1.0, r, np.where(r >= 2.0, LAMBDA_PLATEAU, transition))


def _rho(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return np.sqrt(1.0 + np.sum(x**2))
    return np.sqrt(1.0 + np.sum(x**2, axis=-1))


def lambda_n_eval(n: int, x) -> float:
    """
    λ_n(x) = n·λ(ρ(x)/n)。

    x 可以是标量、一个 d 维状态，或形状为 (N, d) 的一批状态（此时返回 (N,) 数组）。
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    value = n * _lambda(_rho(x) / n)
    return float(value) if np.ndim(value) == 0 else value


def lambda_moment(density: GridDensity1D, n: int) -> float:
    """∫λ_n(x) v(x) dx"""
    centers = density.grid.centers.reshape(-1, 1)
    return float(density.grid.dx * np.dot(lambda_n_eval(n, centers), density.v))


@dataclass
class BoundReport:
    """最大值一阶矩估计的检验结果"""

    C: float
    t0: float
    blocks: int
    bound: float
    empirical: float
    stderr: float
    slack: float
    passed: bool
    n_paths: int

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)


def moment_bound_check(ensemble: PathEnsemble, mu0_first_moment: float, C1: float, C2: float,
                       nuU: float, gamma: float = 1.0, kappa: float = KAPPA_BDG) -> BoundReport:
    """
    C = κ·max(C1, |γ|sqrt(C2 ν(U)), C1 + |γ|sqrt(C2 ν(U)))，t0 由 C(t0 + sqrt(t0)) = 1/2 给出，
    界为 2^{[T/t0]+1}(μ0(|·|) + 1) - 1，与经验的 E sup|X| 比较。
    """
    jump_const = abs(gamma) * math.sqrt(C2 * nuU)
    C = kappa * max(C1, jump_const, C1 + jump_const)
    if C == 0:
        t0, blocks = math.inf, 0
    else:
        root = (-1.0 + math.sqrt(1.0 + 2.0 / C)) / 2.0
        t0 = root**2
        blocks = int(math.floor(ensemble.horizon / t0))
    power = math.ldexp(1.0, blocks + 1) if blocks + 1 < 1024 else math.inf
    bound = power * (mu0_first_moment + 1.0) - 1.0

    sup = ensemble.sup_norm()[ensemble.alive]
    empirical = float(sup.mean())
    stderr = float(sup.std(ddof=1) / math.sqrt(sup.size)) if sup.size > 1 else 0.0
    slack = math.inf if empirical == 0 else bound / empirical
    report = BoundReport(C=C, t0=t0, blocks=blocks, bound=bound, empirical=empirical, stderr=stderr,
                         slack=slack, passed=empirical <= bound, n_paths=int(sup.size))
    logger.info(f"moment bound: E sup|X| = {empirical:.4g} vs bound {bound:.4g} (slack {slack:.3g})")
    return report
