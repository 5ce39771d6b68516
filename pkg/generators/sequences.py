"""
JumpFPE - Coefficient Sequences Module

这个模块构造收敛实验所需的系数序列：
- 磨光（mollify）：b^n = φ_n * b，a^n = φ_n * a，σ^n = sqrt(2 a^n)，γ^n = nγ/(n+1)
- 去跳（kill-jumps）：γ^n = γ/n
- 去扩散（kill-diffusion）：σ^n = σ/n，γ^n = nγ/(n+1)
- 全部去除（kill-both）：σ^n = (1/n)·I，γ^n = γ/n，极限为常微分方程
以及系数序列在紧集上的 L^1 差异。
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from core.coefficients import CoefficientSet
from core.errors import CoefficientError, UnknownKindError

logger = logging.getLogger(__name__)

DEFAULT_NODES = 32
NEGATIVE_TOL = 1e-12


# ==================== 磨光子 ====================

def _bump(r2: np.ndarray) -> np.ndarray:
    """exp(-1/(1-|z|^2))，|z| < 1"""
    inside = r2 < 1.0
    safe = np.where(inside, 1.0 - r2, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


@lru_cache(maxsize=None)
def mollifier_constant(dim: int = 1) -> float:
    """使 c·exp(-1/(1-|z|^2)) 在 B_1 上积分为 1 的常数"""
    radial, _ = integrate.quad(lambda r: r ** (dim - 1) * math.exp(-1.0 / (1.0 - r * r)),
                               0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    sphere = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    return 1.0 / (sphere * radial)


def mollifier(z: np.ndarray, dim: int = 1) -> np.ndarray:
    """单位质量的标准磨光子 φ(z)"""
    z = np.asarray(z, dtype=float)
    r2 = z**2 if dim == 1 and z.ndim <= 1 else np.sum(z**2, axis=-1)
    return mollifier_constant(dim) * _bump(r2)


@dataclass
class MollifierScheme:
    """B_1 上的张量 Gauss–Legendre 求积；权重 ∝ ω_j φ(z_j) 并归一化为 1"""

    n: int
    n_nodes: int = DEFAULT_NODES
    dim: int = 1
    nodes: np.ndarray = field(init=False, repr=False)     # (J, d)，在 B_1 内
    weights: np.ndarray = field(init=False, repr=False)   # (J,)
    raw_mass: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        x, w = special.roots_legendre(self.n_nodes)
        grids = np.meshgrid(*([x] * self.dim), indexing="ij")
        nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
        wgrid = np.meshgrid(*([w] * self.dim), indexing="ij")
        omega = np.prod(np.stack([g.reshape(-1) for g in wgrid], axis=1), axis=1)
        density = mollifier(nodes, self.dim) if self.dim > 1 else mollifier(nodes[:, 0], 1)
        keep = density > 0
        raw = omega[keep] * density[keep]
        self.raw_mass = float(raw.sum())
        self.nodes = nodes[keep]
        self.weights = raw / raw.sum()

    @property
    def offsets(self) -> np.ndarray:
        """φ_n 的求积点 z_j / n，位于 B_{1/n} 内"""
        return self.nodes / self.n

    def convolve(self, func, t, x: np.ndarray) -> np.ndarray:
        """Σ_j W_j func(t, x - z_j/n)，x: (N, d)；func 返回 (N, ...)"""
        N, d = x.shape
        J = self.weights.shape[0]
        shifted = (x[:, None, :] - self.offsets[None, :, :]).reshape(N * J, d)
        t_rep = np.repeat(np.asarray(t, dtype=float), J) if np.ndim(t) else t
        values = np.asarray(func(t_rep, shifted), dtype=float)
        values = values.reshape((N, J) + values.shape[1:])
        return np.tensordot(self.weights, np.moveaxis(values, 1, 0), axes=(0, 0))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    """批量对称半正定矩阵的平方根"""
    eigval, eigvec = np.linalg.eigh(a)
    return np.einsum("nij,nj,nkj->nik", eigvec, np.sqrt(np.maximum(eigval, 0.0)), eigvec)


def mollify_coefficients(base: CoefficientSet, scheme: MollifierScheme) -> CoefficientSet:
    """
    b^n = φ_n * b，a^n = φ_n * a，σ^n = sqrt(2 a^n)（一维取标量平方根，高维取 PSD 平方根）。
    跳跃部分与增长常数保持不变。
    """
    if scheme.dim != base.dim:
        raise CoefficientError(f"scheme dim {scheme.dim} != coefficient dim {base.dim}")

    def drift(t, x):
        return scheme.convolve(base.b, t, x)

    def a_n(t, x):
        a = scheme.convolve(base.a, t, x)
        if base.dim == 1:
            lowest = a.reshape(-1)
        else:
            lowest = np.linalg.eigvalsh(a)[:, 0]
        if lowest.size and lowest.min() < -NEGATIVE_TOL:
            raise CoefficientError(f"mollified diffusion matrix is negative ({lowest.min():.3e})")
        return a

    def diffusion(t, x):
        a = a_n(t, x)
        if base.dim == 1:
            return np.sqrt(2.0 * np.maximum(a, 0.0)).reshape(x.shape[0], 1, 1)
        return _psd_sqrt(2.0 * a)

    return base.replace(drift=drift, diffusion=diffusion, noise_dim=base.dim,
                        name=f"{base.name}|mollify(n={scheme.n})")


def gamma_seq(gamma: float, n: int) -> float:
    """γ^n = nγ/(n+1)"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * gamma / (n + 1)


# ==================== 序列策略 ====================

def _zero_diffusion(dim: int, noise_dim: int):
    def diffusion(t, x):
        return np.zeros((x.shape[0], dim, noise_dim))
    return diffusion


def _scaled_diffusion(base: CoefficientSet, factor: float):
    def diffusion(t, x):
        return factor * base.sigma(t, x)
    return diffusion


def _identity_diffusion(dim: int, factor: float):
    def diffusion(t, x):
        return np.broadcast_to(factor * np.eye(dim), (x.shape[0], dim, dim)).copy()
    return diffusion


class SequenceStrategy(ABC):
    """系数序列策略抽象基类"""

    kind = "abstract"

    def __init__(self, n_nodes: int = DEFAULT_NODES):
        self.n_nodes = n_nodes

    @abstractmethod
    def build(self, base: CoefficientSet, n: int) -> CoefficientSet:
        pass

    @abstractmethod
    def target(self, base: CoefficientSet) -> CoefficientSet:
        pass


class MollifySequence(SequenceStrategy):
    """磨光系数序列，极限为原系数"""

    kind = "mollify"

    def build(self, base: CoefficientSet, n: int) -> CoefficientSet:
        scheme = MollifierScheme(n=n, n_nodes=self.n_nodes, dim=base.dim)
        return mollify_coefficients(base, scheme).replace(jump_scale=gamma_seq(base.jump_scale, n))

    def target(self, base: CoefficientSet) -> CoefficientSet:
        return base


class KillJumpsSequence(SequenceStrategy):
    """γ^n = γ/n，极限为无跳扩散"""

    kind = "kill-jumps"

    def build(self, base: CoefficientSet, n: int) -> CoefficientSet:
        return base.replace(jump_scale=base.jump_scale / n, name=f"{base.name}|kill-jumps(n={n})")

    def target(self, base: CoefficientSet) -> CoefficientSet:
        return base.replace(jump_scale=0.0, name=f"{base.name}|no-jumps")


class KillDiffusionSequence(SequenceStrategy):
    """σ^n = σ/n，γ^n = nγ/(n+1)，极限为纯跳方程"""

    kind = "kill-diffusion"

    def build(self, base: CoefficientSet, n: int) -> CoefficientSet:
        return base.replace(diffusion=_scaled_diffusion(base, 1.0 / n),
                            jump_scale=gamma_seq(base.jump_scale, n),
                            name=f"{base.name}|kill-diffusion(n={n})")

    def target(self, base: CoefficientSet) -> CoefficientSet:
        return base.replace(diffusion=_zero_diffusion(base.dim, base.noise_dim),
                            name=f"{base.name}|no-diffusion")


class KillBothSequence(SequenceStrategy):
    """σ^n = (1/n)·I，γ^n = γ/n，极限为常微分方程"""

    kind = "kill-both"

    def build(self, base: CoefficientSet, n: int) -> CoefficientSet:
        return base.replace(diffusion=_identity_diffusion(base.dim, 1.0 / n), noise_dim=base.dim,
                            jump_scale=base.jump_scale / n, name=f"{base.name}|kill-both(n={n})")

    def target(self, base: CoefficientSet) -> CoefficientSet:
        return base.replace(diffusion=_zero_diffusion(base.dim, base.noise_dim), jump_scale=0.0,
                            name=f"{base.name}|ode")


class SequenceBuilder:
    """系数序列工厂类"""

    STRATEGIES = {
        "mollify": MollifySequence,
        "kill-jumps": KillJumpsSequence,
        "kill-diffusion": KillDiffusionSequence,
        "kill-both": KillBothSequence,
    }

    def __init__(self, kind: str, **strategy_params):
        strategy_class = self.STRATEGIES.get(kind)
        if strategy_class is None:
            raise UnknownKindError(f"unknown sequence kind '{kind}'; available: {self.get_available_strategies()}")
        self.strategy = strategy_class(**strategy_params)

    @classmethod
    def register_strategy(cls, name: str, strategy_class: type):
        cls.STRATEGIES[name] = strategy_class

    @classmethod
    def get_available_strategies(cls) -> List[str]:
        return list(cls.STRATEGIES.keys())


@dataclass
class SequenceSpec:
    """序列类型、n 值、基准系数与目标系数（缺省时由类型推出）"""

    kind: str
    n_values: Sequence[int]
    base: CoefficientSet
    target: Optional[CoefficientSet] = None
    n_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        values = [int(n) for n in self.n_values]
        if not values or any(n < 1 for n in values):
            raise ValueError(f"n_values must be positive integers, got {self.n_values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"n_values must be strictly increasing, got {values}")
        self.n_values = values
        strategy = SequenceBuilder(self.kind, n_nodes=self.n_nodes).strategy
        if self.target is None:
            self.target = strategy.target(self.base)


def build_sequence(spec: SequenceSpec) -> List[CoefficientSet]:
    """按 spec.kind 为每个 n 构造系数集合"""
    strategy = SequenceBuilder(spec.kind, n_nodes=spec.n_nodes).strategy
    sequence = [strategy.build(spec.base, n) for n in spec.n_values]
    logger.debug(f"built {spec.kind} sequence for n={spec.n_values}")
    return sequence


# ==================== L^1_loc 差异 ====================

def _composite_gauss(lo: float, hi: float, panels: int, order: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


def l1loc_discrepancy(cs_n: CoefficientSet, cs: CoefficientSet, box: Tuple[float, float],
                      t_window: Tuple[float, float], n_quad: int, time_panels: int = 1) -> float:
    """
    ∫_{t_window} ∫_{box} (|b^n - b| + |a^n - a|) dx dt，一维。

    x 方向用 n_quad 个面板的复合 8 点 Gauss–Legendre，t 方向用 time_panels 个面板。
    """
    if n_quad < 16:
        raise ValueError(f"n_quad must be >= 16, got {n_quad}")
    x_lo, x_hi = box
    if not x_lo < x_hi:
        raise ValueError(f"box must satisfy x_lo < x_hi, got {box}")
    xs, wx = _composite_gauss(x_lo, x_hi, n_quad)
    ts, wt = _composite_gauss(t_window[0], t_window[1], time_panels)
    total = 0.0
    for t, weight_t in zip(ts, wt):
        diff = np.abs(cs_n.drift_1d(t, xs) - cs.drift_1d(t, xs)) + np.abs(cs_n.a_1d(t, xs) - cs.a_1d(t, xs))
        total += weight_t * float(np.dot(wx, diff))
    return total
