"""
JumpFPE - Martingale Probe Module

鞅问题的积分形式检验：对测试函数 φ 与 [0, s] 可测的有界泛函 χ_s，

    E[(φ(w_t) - φ(w_s) - ∫_s^t (A_r + B_r)φ(w_r) dr) · χ_s(w)] = 0

用路径集合的蒙特卡洛均值与标准误来估计左边。
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from core.coefficients import CoefficientSet
from core.errors import DimensionMismatchError
from core.test_functions import PathFunctional, TestFunction
from generators.paths import PathEnsemble
from solvers.fpe import apply_generator

logger = logging.getLogger(__name__)

ROW_CHUNK = 8192


@dataclass
class DefectReport:
    """鞅缺陷的蒙特卡洛估计"""

    estimate: float
    stderr: float
    n_paths: int
    phi: str
    chi: str
    s: float
    t: float

    def within(self, n_sigma: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.estimate) <= n_sigma * self.stderr + slack

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)


def _bracket_rows(cs: CoefficientSet, phi: TestFunction, s: float, t: float,
                  times: np.ndarray, values: np.ndarray, pre: np.ndarray) -> np.ndarray:
    """一批路径上的 φ(w_t) - φ(w_s) - ∫_s^t Gφ(w_r) dr"""
    n = times.shape[0]
    rows = np.arange(n)
    i_s = (times <= s).sum(axis=1) - 1
    i_t = (times <= t).sum(axis=1) - 1
    x_s = values[rows, i_s]
    x_t = values[rows, i_t]
    x_t_left = np.where(times[rows, i_t] == t, pre[rows, i_t], x_t)

    lo = i_s + 1
    count = (times < t).sum(axis=1) - lo
    width = max(int(count.max()), 0)
    offsets = np.arange(width)
    valid = offsets[None, :] < count[:, None]
    gather = np.where(valid, lo[:, None] + offsets[None, :], 0)

    node_t = np.column_stack([np.full(n, s), np.where(valid, times[rows[:, None], gather], t), np.full(n, t)])
    right = np.column_stack([x_s, np.where(valid, values[rows[:, None], gather], x_t[:, None]), x_t])
    left = np.column_stack([x_s, np.where(valid, pre[rows[:, None], gather], x_t_left[:, None]), x_t_left])

    g_right = apply_generator(cs, node_t[:, :-1], phi, right[:, :-1])
    g_left = apply_generator(cs, node_t[:, 1:], phi, left[:, 1:])
    integral = np.sum(0.5 * (g_right + g_left) * np.diff(node_t, axis=1), axis=1)
    return phi.value(x_t) - phi.value(x_s) - integral


def _functional_rows(chi: PathFunctional, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    n = times.shape[0]
    if not chi.times:
        return chi.evaluate(np.zeros((n, 0)))
    rows = np.arange(n)
    index = np.column_stack([(times <= tau).sum(axis=1) - 1 for tau in chi.times])
    return chi.evaluate(values[rows[:, None], index])


def _check_window(ensemble: PathEnsemble, chis: Sequence[PathFunctional], s: float, t: float):
    if not s < t:
        raise ValueError(f"need s < t, got s={s}, t={t}")
    if s < 0 or t > ensemble.horizon + 1e-12:
        raise ValueError(f"[s, t] = [{s}, {t}] is not inside [0, {ensemble.horizon}]")
    for chi in chis:
        if abs(chi.cutoff - s) > 1e-12:
            raise ValueError(f"functional '{chi.name}' has cutoff {chi.cutoff}, expected s={s}")
    if ensemble.dim != 1:
        raise DimensionMismatchError("martingale_defect is implemented for 1-D ensembles")


def martingale_defects(ensemble: PathEnsemble, cs: CoefficientSet, phi: TestFunction,
                       chis: Sequence[PathFunctional], s: float, t: float) -> List[DefectReport]:
    """同一个 φ 对多个 χ 的缺陷估计；φ 的括号项只计算一次"""
    _check_window(ensemble, chis, s, t)
    alive = np.flatnonzero(ensemble.alive)
    terms = [[] for _ in chis]
    for start in range(0, alive.size, ROW_CHUNK):
        idx = alive[start:start + ROW_CHUNK]
        times = ensemble.times[idx]
        values = ensemble.values[idx, :, 0]
        bracket = _bracket_rows(cs, phi, s, t, times, values, ensemble.pre_values[idx, :, 0])
        for parts, chi in zip(terms, chis):
            parts.append(bracket * _functional_rows(chi, times, values))

    reports = []
    for parts, chi in zip(terms, chis):
        x = np.concatenate(parts)
        n = x.size
        stderr = float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        report = DefectReport(estimate=float(x.mean()), stderr=stderr, n_paths=int(n),
                              phi=phi.describe(), chi=chi.name, s=float(s), t=float(t))
        logger.debug(f"defect {report.phi} x {report.chi}: {report.estimate:.3e} ± {report.stderr:.3e}")
        reports.append(report)
    return reports


def martingale_defect(ensemble: PathEnsemble, cs: CoefficientSet, phi: TestFunction,
                      chi: PathFunctional, s: float, t: float) -> DefectReport:
    """
    鞅缺陷估计。时间积分在每条路径自己的节点上用梯形公式：
    区间左端取右极限，右端取左极限。
    """
    return martingale_defects(ensemble, cs, phi, [chi], s, t)[0]
