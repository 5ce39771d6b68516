"""JumpFPE - Core Coefficients Module

这个模块提供了跳扩散方程

    dX_t = b(t, X_t) dt + σ(t, X_t) dB_t + ∫_U γ·g(t, X_{t-}, u) N(dt, du)

的系数数据，以及线性增长假设的抽查报告。

所有系数函数都按批量调用：
- drift(t, x)            x: (N, d)            -> (N, d)
- diffusion(t, x)        x: (N, d)            -> (N, d, m)
- jump_amplitude(t, x, u) x: (N, d), u: (N, k) -> (N, d)
其中 t 是标量或形状为 (N,) 的数组。
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from core.errors import CoefficientError
from core.measures import MarkMeasure
from core.rng import SeedLike, as_generator

logger = logging.getLogger(__name__)

DriftFn = Callable[[object, np.ndarray], np.ndarray]
DiffusionFn = Callable[[object, np.ndarray], np.ndarray]
JumpFn = Callable[[object, np.ndarray, np.ndarray], np.ndarray]

RATIO_TOL = 1e-12


def additive_jump(t, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """g(t, x, u) = u"""
    return np.broadcast_to(u, x.shape).astype(float)


@dataclass(frozen=True)
class CoefficientSet:
    """方程系数 (b, σ, γ, g, ν) 以及增长常数 C1, C2"""

    drift: DriftFn
    diffusion: DiffusionFn
    jump_scale: float
    jump_amplitude: JumpFn
    nu: MarkMeasure
    C1: float
    C2: float
    dim: int = 1
    noise_dim: int = 1
    additive_jumps: bool = False
    name: str = "custom"
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1 or self.noise_dim < 1:
            raise CoefficientError(f"dim and noise_dim must be positive, got {self.dim}, {self.noise_dim}")
        if not (self.C1 > 0 and self.C2 > 0):
            raise CoefficientError(f"growth constants must be positive, got C1={self.C1}, C2={self.C2}")
        if not np.isfinite(self.jump_scale):
            raise CoefficientError("jump_scale must be finite")
        if self.additive_jumps and self.nu.n_atoms and self.nu.mark_dim != self.dim:
            raise CoefficientError("additive jumps need marks of the state dimension")

    def replace(self, **changes) -> "CoefficientSet":
        return dataclasses.replace(self, **changes)

    # ---------- 批量求值 ----------

    def b(self, t, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.drift(t, x), dtype=float).reshape(x.shape[0], self.dim)

    def sigma(self, t, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.diffusion(t, x), dtype=float).reshape(x.shape[0], self.dim, self.noise_dim)

    def a(self, t, x: np.ndarray) -> np.ndarray:
        """a = ½σσ*"""
        s = self.sigma(t, x)
        return 0.5 * np.einsum("nij,nkj->nik", s, s)

    def g(self, t, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.jump_amplitude(t, x, u), dtype=float).reshape(x.shape[0], self.dim)

    # ---------- 一维辅助 ----------

    def drift_1d(self, t, x: np.ndarray) -> np.ndarray:
        """一维漂移，x 为任意形状的标量数组"""
        self._require_1d()
        flat = np.asarray(x, dtype=float).reshape(-1, 1)
        return self.b(_flat_time(t, flat), flat).reshape(np.shape(x))

    def a_1d(self, t, x: np.ndarray) -> np.ndarray:
        self._require_1d()
        flat = np.asarray(x, dtype=float).reshape(-1, 1)
        return self.a(_flat_time(t, flat), flat).reshape(np.shape(x))

    def jump_targets_1d(self, t, x: np.ndarray) -> np.ndarray:
        """x + γ·g(t, x, u_k)，形状为 x.shape + (K,)"""
        self._require_1d()
        flat = np.asarray(x, dtype=float).reshape(-1, 1)
        targets = np.empty((flat.shape[0], self.nu.n_atoms))
        for k, mark in enumerate(self.nu.marks):
            u = np.broadcast_to(mark, (flat.shape[0], self.nu.mark_dim))
            targets[:, k] = flat[:, 0] + self.jump_scale * self.g(_flat_time(t, flat), flat, u)[:, 0]
        return targets.reshape(np.shape(x) + (self.nu.n_atoms,))

    def additive_shifts(self) -> np.ndarray:
        """加性跳跃时每个原子的位移 γ·u_k（一维）"""
        if not self.additive_jumps:
            raise CoefficientError(f"problem '{self.name}' has state-dependent jumps; shifts are undefined")
        return self.jump_scale * self.nu.marks[:, 0]

    def _require_1d(self):
        if self.dim != 1:
            raise CoefficientError(f"operation needs a 1-D problem, '{self.name}' has dim={self.dim}")

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "params": dict(self.params),
            "jump_scale": self.jump_scale,
            "nu": self.nu.to_dict(),
            "C1": self.C1,
            "C2": self.C2,
            "dim": self.dim,
            "noise_dim": self.noise_dim,
            "additive_jumps": self.additive_jumps,
        }


def _flat_time(t, flat: np.ndarray):
    if np.ndim(t) == 0:
        return float(t)
    return np.asarray(t, dtype=float).reshape(-1)


@dataclass
class ValidationReport:
    """线性增长假设的抽查结果"""

    n_probe: int
    max_ratio_b_sigma: float
    max_ratio_jump_sq: float
    max_ratio_jump_l1: float
    witness_b_sigma: Optional[Dict[str, object]]
    witness_jump: Optional[Dict[str, object]]
    violation: bool

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)


def validate_coefficients(cs: CoefficientSet, n_probe: int, seed: SeedLike = 0,
                          radius: float = 10.0, horizon: float = 1.0) -> ValidationReport:
    """
    在 n_probe 个随机点 (t, x) 上抽查增长条件：

        |b| + ‖σ‖ <= C1 (1+|x|)
        Σ_k w_k |g(t,x,u_k)|^2 <= C2 (1+|x|)^2
        Σ_k w_k |g(t,x,u_k)| <= sqrt(ν(U) C2) (1+|x|)

    只报告，不抛异常。
    """
    if n_probe < 1:
        raise ValueError(f"n_probe must be >= 1, got {n_probe}")
    rng = as_generator(seed)
    t = rng.uniform(0.0, horizon, size=n_probe)
    x = rng.uniform(-radius, radius, size=(n_probe, cs.dim))
    scale = 1.0 + np.linalg.norm(x, axis=1)

    b_norm = np.linalg.norm(cs.b(t, x), axis=1)
    sigma_norm = np.linalg.norm(cs.sigma(t, x).reshape(n_probe, -1), axis=1)
    ratio_bs = (b_norm + sigma_norm) / (cs.C1 * scale)

    jump_sq = np.zeros(n_probe)
    jump_l1 = np.zeros(n_probe)
    for mark, weight in zip(cs.nu.marks, cs.nu.weights):
        u = np.broadcast_to(mark, (n_probe, cs.nu.mark_dim))
        g_norm = np.linalg.norm(cs.g(t, x, u), axis=1)
        jump_sq += weight * g_norm**2
        jump_l1 += weight * g_norm
    ratio_sq = jump_sq / (cs.C2 * scale**2)
    if cs.nu.total_mass > 0:
        ratio_l1 = jump_l1 / (np.sqrt(cs.nu.total_mass * cs.C2) * scale)
    else:
        ratio_l1 = np.zeros(n_probe)

    def witness(ratio: np.ndarray) -> Optional[Dict[str, object]]:
        i = int(np.argmax(ratio))
        if ratio[i] <= 1.0 + RATIO_TOL:
            return None
        return {"t": float(t[i]), "x": x[i].tolist(), "ratio": float(ratio[i])}

    w_bs = witness(ratio_bs)
    w_jump = witness(ratio_sq)
    report = ValidationReport(
        n_probe=n_probe,
        max_ratio_b_sigma=float(ratio_bs.max()),
        max_ratio_jump_sq=float(ratio_sq.max()),
        max_ratio_jump_l1=float(ratio_l1.max()),
        witness_b_sigma=w_bs,
        witness_jump=w_jump,
        violation=w_bs is not None or w_jump is not None,
    )
    if report.violation:
        logger.warning(f"Growth hypothesis violated for '{cs.name}': {w_bs or w_jump}")
    else:
        logger.debug(f"Growth hypotheses hold on {n_probe} probes for '{cs.name}'")
    return report
