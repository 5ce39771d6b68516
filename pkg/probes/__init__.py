"""JumpFPE - Probes Package

定量判据：分布之间的距离、鞅问题的缺陷统计、矩估计。
"""

from .distances import wasserstein1, w1_against_density
from .martingale import DefectReport, martingale_defect, martingale_defects
from .moments import BoundReport, lambda_n_eval, lambda_moment, moment_bound_check

__all__ = [
    'wasserstein1',
    'w1_against_density',
    'DefectReport',
    'martingale_defect',
    'martingale_defects',
    'BoundReport',
    'lambda_n_eval',
    'lambda_moment',
    'moment_bound_check',
]
