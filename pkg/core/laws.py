"""JumpFPE - Core Laws Module

概率分布的两种表示：
- InitialLaw：初始分布 μ0（点质量或高斯），可采样、可在网格上求单元平均
- EmpiricalLaw：某一时刻边缘分布的经验样本
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import stats

from core.errors import DimensionMismatchError


@dataclass(frozen=True)
class InitialLaw:
    """初始分布：kind 为 "point"（δ_loc）或 "gaussian"（N(loc, scale^2 I)）"""

    kind: str
    loc: float = 0.0
    scale: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("point", "gaussian"):
            raise ValueError(f"unknown initial law kind '{self.kind}'")
        if self.kind == "gaussian" and not self.scale > 0:
            raise ValueError(f"gaussian initial law needs scale > 0, got {self.scale}")

    @property
    def loc_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.loc, dtype=float), (self.dim,)).copy()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """抽取一个初始状态；点质量不消耗随机数"""
        if self.kind == "point":
            return self.loc_vector
        return self.loc_vector + self.scale * rng.standard_normal(self.dim)

    def mean(self) -> np.ndarray:
        return self.loc_vector

    def first_moment(self) -> float:
        """μ0(|·|)"""
        centre = float(np.linalg.norm(self.loc_vector))
        if self.kind == "point":
            return centre
        if self.dim == 1:
            return float(stats.foldnorm.mean(centre / self.scale, scale=self.scale))
        if centre == 0:
            return float(self.scale * stats.chi.mean(self.dim))
        nc = (centre / self.scale) ** 2
        return float(self.scale * stats.ncx2.expect(np.sqrt, args=(self.dim, nc)))

    def cell_averages(self, grid) -> np.ndarray:
        """网格上的单元平均密度；点质量落在最近的单元"""
        if self.dim != 1:
            raise DimensionMismatchError("cell averages are only defined for 1-D initial laws")
        v = np.zeros(grid.n_cells)
        if self.kind == "point":
            v[grid.nearest_cell(float(self.loc))] = 1.0 / grid.dx
            return v
        cdf = stats.norm.cdf(grid.edges, loc=float(self.loc), scale=self.scale)
        return np.diff(cdf) / grid.dx

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind, "loc": float(np.asarray(self.loc).reshape(-1)[0]) if self.dim == 1
                else np.asarray(self.loc).tolist(), "scale": self.scale, "dim": self.dim}


@dataclass
class EmpiricalLaw:
    """某一时刻的经验分布 (ℙ∘e_t^{-1} 的样本替身)"""

    samples: np.ndarray
    t: float = 0.0
    source: Optional[str] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 2 and self.samples.shape[1] == 1:
            self.samples = self.samples[:, 0]
        if self.samples.shape[0] == 0:
            raise ValueError("EmpiricalLaw needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("EmpiricalLaw samples must be finite")

    @property
    def dim(self) -> int:
        return 1 if self.samples.ndim == 1 else int(self.samples.shape[1])

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])

    def mean(self) -> float:
        return float(np.mean(self.samples)) if self.dim == 1 else np.mean(self.samples, axis=0)

    def var(self) -> float:
        if self.size < 2:
            return 0.0
        return float(np.var(self.samples, ddof=1)) if self.dim == 1 else np.var(self.samples, axis=0, ddof=1)

    def stderr(self) -> float:
        """均值的标准误"""
        return np.sqrt(self.var() / self.size)
