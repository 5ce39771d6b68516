"""JumpFPE - Core Grid Module

一维截断区域上的有限体积网格与单元平均密度。
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

MIN_CELLS = 8
MASS_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """[x_min, x_max] 上的均匀网格"""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min must be < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_cells < MIN_CELLS:
            raise ValueError(f"n_cells must be >= {MIN_CELLS}, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    def nearest_cell(self, x: float) -> int:
        i = int(np.floor((x - self.x_min) / self.dx))
        return min(max(i, 0), self.n_cells - 1)


@dataclass
class GridDensity1D:
    """单元平均概率密度 v 与从边界流失的质量"""

    grid: Grid1D
    v: np.ndarray
    leaked_mass: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.v.shape != (self.grid.n_cells,):
            raise ValueError(f"density has shape {self.v.shape}, grid has {self.grid.n_cells} cells")
        if np.any(self.v < 0) or not np.all(np.isfinite(self.v)):
            raise ValueError("density values must be finite and nonnegative")

    @property
    def mass(self) -> float:
        """网格上的质量 Δx·Σv_i"""
        return float(self.grid.dx * self.v.sum())

    def conservation_error(self, initial_mass: float = 1.0) -> float:
        return abs(self.mass + self.leaked_mass - initial_mass)

    def is_conservative(self, initial_mass: float = 1.0, tol: float = MASS_TOL) -> bool:
        return self.conservation_error(initial_mass) <= tol

    def mean(self) -> float:
        """∫x v dx"""
        return float(self.grid.dx * np.dot(self.grid.centers, self.v))

    def variance(self) -> float:
        """归一化后的方差（含单元内均匀分布的 Δx²/12 修正）"""
        m = self.mass
        centers = self.grid.centers
        mu = self.mean() / m
        second = self.grid.dx * np.dot(centers**2, self.v) / m
        return float(second - mu**2 + self.grid.dx**2 / 12.0)

    def cdf_at_edges(self) -> np.ndarray:
        """各单元边界处的累积质量，按网格总质量归一化"""
        cumulative = np.concatenate(([0.0], np.cumsum(self.v) * self.grid.dx))
        return cumulative / cumulative[-1]


@dataclass(frozen=True)
class TimeWindow:
    """[t_lo, t_hi] 上逐步累积的密度 Σ Δt_k v_k（左端点，与显式格式一致）"""

    t_lo: float
    t_hi: float
    integrated: np.ndarray

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_lo + self.t_hi)


@dataclass
class DensityTrajectory:
    """
    检查点时刻上的密度序列。

    windows 由求解器填写：相邻窗口首尾相接，覆盖 [0, T]，检查点总是窗口端点。
    手工构造的轨迹可以没有窗口。
    """

    densities: List[GridDensity1D] = field(default_factory=list)
    windows: List[TimeWindow] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([d.t for d in self.densities])

    def append(self, density: GridDensity1D):
        self.densities.append(density)

    def add_window(self, t_lo: float, t_hi: float, integrated: np.ndarray):
        if self.windows and abs(self.windows[-1].t_hi - t_lo) > 1e-12 * max(1.0, t_lo):
            raise ValueError(f"window [{t_lo}, {t_hi}] does not continue from {self.windows[-1].t_hi}")
        self.windows.append(TimeWindow(t_lo=float(t_lo), t_hi=float(t_hi), integrated=integrated))

    def at(self, t: float, atol: float = 1e-12) -> GridDensity1D:
        for density in self.densities:
            if abs(density.t - t) <= atol:
                return density
        raise KeyError(f"no checkpoint at t={t}; available: {self.times.tolist()}")

    def __len__(self) -> int:
        return len(self.densities)

    def __iter__(self):
        return iter(self.densities)

    def manifest(self) -> List[Dict[str, float]]:
        """每个检查点的质量、流失量与一阶矩"""
        return [
            {
                "t": d.t,
                "mass": d.mass,
                "leaked_mass": d.leaked_mass,
                "first_moment": float(d.grid.dx * np.dot(np.abs(d.grid.centers), d.v)),
                "mean": d.mean(),
            }
            for d in self.densities
        ]
