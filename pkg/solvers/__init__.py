"""JumpFPE - Solvers Package

非局部 Fokker–Planck 方程的一维网格求解器与解析对照解。
"""

from .fpe import (
    apply_generator,
    max_stable_dt,
    fpe_step,
    initial_density,
    solve_fpe,
    weak_form_residual,
    first_moment,
)
from .oracles import (
    poisson_series_atoms,
    poisson_series_density,
    ou_jump_mean,
    ou_jump_variance,
    heat_kernel_variance,
)

__all__ = [
    'apply_generator',
    'max_stable_dt',
    'fpe_step',
    'initial_density',
    'solve_fpe',
    'weak_form_residual',
    'first_moment',
    'poisson_series_atoms',
    'poisson_series_density',
    'ou_jump_mean',
    'ou_jump_variance',
    'heat_kernel_variance',
]
