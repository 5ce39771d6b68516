"""JumpFPE - Core Test Functions Module

这个模块提供了弱形式与鞅问题检验所用的两类对象：
- TestFunction：C_c^2 紧支撑测试函数 φ（值、一阶导、二阶导）
- PathFunctional：只依赖路径在 [0, s] 上取值的有界连续泛函 χ_s
以及两者的默认字典。
"""

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.special import expit

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """紧支撑在 [center - radius, center + radius] 内的测试函数"""

    __test__ = False  # 不是 pytest 测试类

    center: float
    radius: float
    shape: str
    value: ArrayFn = field(repr=False)
    d1: ArrayFn = field(repr=False)
    d2: ArrayFn = field(repr=False)

    @property
    def support(self) -> Tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)

    def describe(self) -> str:
        return f"{self.shape}(c={self.center:g},r={self.radius:g})"


def bump(center: float, radius: float) -> TestFunction:
    """(1 - ((x-c)/r)^2)^3，|x-c| < r；C^2 且在支撑边界处值与两阶导数都为 0"""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")

    def scaled(x):
        s = (np.asarray(x, dtype=float) - center) / radius
        inside = np.abs(s) < 1.0
        return s, inside

    def value(x):
        s, inside = scaled(x)
        return np.where(inside, (1.0 - s**2) ** 3, 0.0)

    def d1(x):
        s, inside = scaled(x)
        return np.where(inside, -6.0 * s * (1.0 - s**2) ** 2 / radius, 0.0)

    def d2(x):
        s, inside = scaled(x)
        return np.where(inside, -6.0 * (1.0 - s**2) * (1.0 - 5.0 * s**2) / radius**2, 0.0)

    return TestFunction(center=center, radius=radius, shape="bump", value=value, d1=d1, d2=d2)


DEFAULT_CENTERS = (-1.0, -0.5, 0.0, 0.5, 1.0)
DEFAULT_RADII = (0.5, 1.0, 1.5)


def test_function_dictionary(centers: Sequence[float] = DEFAULT_CENTERS,
                             radii: Sequence[float] = DEFAULT_RADII) -> List[TestFunction]:
    """默认字典：5 个中心 × 3 个半径的多项式鼓包"""
    return [bump(c, r) for c in centers for r in radii]


test_function_dictionary.__test__ = False


@dataclass(frozen=True)
class PathFunctional:
    """χ_s(w) = evaluator(w_{τ_1}, ..., w_{τ_k})，τ_j <= s，|χ| <= bound"""

    cutoff: float
    times: Tuple[float, ...]
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    bound: float
    name: str

    def __post_init__(self):
        if any(tau < 0 or tau > self.cutoff for tau in self.times):
            raise ValueError(f"functional '{self.name}' reads times {self.times} outside [0, {self.cutoff}]")

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """values: (N, k)，第 j 列为 w_{τ_j}"""
        out = np.asarray(self.evaluator(values), dtype=float)
        if np.any(np.abs(out) > self.bound + 1e-12):
            raise ValueError(f"functional '{self.name}' exceeded its declared bound {self.bound}")
        return out


def constant_functional(cutoff: float, c: float = 1.0) -> PathFunctional:
    return PathFunctional(cutoff=cutoff, times=(), evaluator=lambda values: np.full(values.shape[0], c),
                          bound=abs(c), name=f"const({c:g})")


def sigmoid_product(cutoff: float, times: Sequence[float], centers: Sequence[float],
                    slopes: Sequence[float]) -> PathFunctional:
    """Π_j expit(slope_j·(w_{τ_j} - center_j))，至多 3 个时刻"""
    if not (len(times) == len(centers) == len(slopes)) or not 1 <= len(times) <= 3:
        raise ValueError("sigmoid_product needs 1 to 3 matching (time, center, slope) triples")
    centers_arr = np.asarray(centers, dtype=float)
    slopes_arr = np.asarray(slopes, dtype=float)

    def evaluator(values):
        return np.prod(expit(slopes_arr * (values - centers_arr)), axis=1)

    label = ",".join(f"{tau:g}" for tau in times)
    return PathFunctional(cutoff=cutoff, times=tuple(float(t) for t in times), evaluator=evaluator,
                          bound=1.0, name=f"sigmoid[{label}]")


def path_functional_dictionary(cutoff: float) -> List[PathFunctional]:
    """χ 字典：常数以及 [0, s] 上至多 3 个时刻的 sigmoid 乘积"""
    s = cutoff
    return [
        constant_functional(s, 1.0),
        sigmoid_product(s, [s], [0.0], [2.0]),
        sigmoid_product(s, [s], [0.5], [-3.0]),
        sigmoid_product(s, [0.5 * s, s], [0.0, 0.0], [1.0, -1.0]),
        sigmoid_product(s, [0.0, 0.5 * s, s], [0.0, 0.25, -0.25], [1.5, 1.5, 1.5]),
    ]
