"""JumpFPE - Composers Package

实验编排：系数序列的收敛实验与六类实验的执行器。
"""

from .convergence import ConvergenceRow, ConvergenceTable, limit_experiment, discrepancy_series
from .experiments import ExperimentResult, ExperimentRunner, run

__all__ = [
    'ConvergenceRow',
    'ConvergenceTable',
    'limit_experiment',
    'discrepancy_series',
    'ExperimentResult',
    'ExperimentRunner',
    'run',
]
