"""JumpFPE - Core Measures Module

这个模块提供了标记空间上的有限原子测度，以及一次泊松随机测度实现的跳跃列表：
- MarkMeasure：有限原子测度 ν = Σ w_k δ_{u_k}
- JumpList：时间有序的 (跳跃时刻, 原子下标) 事件列表
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from core.errors import CoefficientError

MASS_RTOL = 1e-12

MarkLike = Union[float, Sequence[float]]


@dataclass(frozen=True)
class MarkMeasure:
    """标记空间上的有限原子测度"""

    marks: np.ndarray      # (K, mark_dim)
    weights: np.ndarray    # (K,)
    total_mass: float

    def __post_init__(self):
        marks = np.atleast_2d(np.asarray(self.marks, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if marks.size == 0:
            marks = marks.reshape(0, max(marks.shape[-1], 1))
        if marks.shape[0] != weights.shape[0]:
            raise CoefficientError(
                f"MarkMeasure has {marks.shape[0]} marks but {weights.shape[0]} weights"
            )
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise CoefficientError("MarkMeasure weights must be finite and strictly positive")
        if not np.all(np.isfinite(marks)):
            raise CoefficientError("MarkMeasure marks must be finite")
        total = float(self.total_mass)
        if weights.size == 0:
            if total != 0.0:
                raise CoefficientError("an empty MarkMeasure must have total_mass 0")
        elif abs(weights.sum() - total) > MASS_RTOL * max(abs(total), 1.0):
            raise CoefficientError(
                f"total_mass {total!r} differs from the sum of weights {weights.sum()!r}"
            )
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total_mass", total)

    @classmethod
    def from_atoms(cls, atoms: Sequence[Tuple[MarkLike, float]]) -> "MarkMeasure":
        """由 (mark, weight) 列表构造"""
        if len(atoms) == 0:
            return cls.zero()
        marks = np.array([np.atleast_1d(np.asarray(m, dtype=float)) for m, _ in atoms])
        weights = np.array([w for _, w in atoms], dtype=float)
        return cls(marks=marks, weights=weights, total_mass=float(weights.sum()))

    @classmethod
    def dirac(cls, mark: MarkLike, mass: float) -> "MarkMeasure":
        """mass·δ_mark；mass 为 0 时返回零测度"""
        if mass == 0:
            return cls.zero(np.atleast_1d(mark).shape[0])
        return cls.from_atoms([(mark, mass)])

    @classmethod
    def zero(cls, mark_dim: int = 1) -> "MarkMeasure":
        return cls(marks=np.zeros((0, mark_dim)), weights=np.zeros(0), total_mass=0.0)

    @property
    def n_atoms(self) -> int:
        return int(self.weights.shape[0])

    @property
    def mark_dim(self) -> int:
        return int(self.marks.shape[1])

    @property
    def probabilities(self) -> np.ndarray:
        """标记分布 ν/ν(U)"""
        if self.total_mass == 0:
            return np.zeros(0)
        return self.weights / self.total_mass

    def integral(self, func) -> float:
        """Σ_k w_k func(u_k)"""
        return float(sum(w * func(u) for u, w in zip(self.marks, self.weights)))

    def mean_mark(self) -> np.ndarray:
        """∫u ν(du)，用于补偿测度的漂移修正"""
        if self.n_atoms == 0:
            return np.zeros(self.mark_dim)
        return self.weights @ self.marks

    def to_dict(self) -> Dict[str, object]:
        return {
            "atoms": [[m.tolist(), float(w)] for m, w in zip(self.marks, self.weights)],
            "total_mass": self.total_mass,
        }


@dataclass
class JumpList:
    """泊松随机测度 N(dt, du) 在 [0, T] 上的一次实现"""

    times: np.ndarray            # 严格递增, (0, T]
    atom_indices: np.ndarray     # 对应 MarkMeasure 的原子下标
    horizon: float
    events: List[Tuple[float, int]] = field(init=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.atom_indices = np.asarray(self.atom_indices, dtype=np.int64)
        if self.times.shape != self.atom_indices.shape:
            raise ValueError("JumpList times and atom indices must have the same length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("JumpList times must be strictly increasing")
        if self.times.size and (self.times[0] < 0 or self.times[-1] > self.horizon):
            raise ValueError("JumpList times must lie in [0, T]")
        self.events = list(zip(self.times.tolist(), self.atom_indices.tolist()))

    def __len__(self) -> int:
        return int(self.times.size)
