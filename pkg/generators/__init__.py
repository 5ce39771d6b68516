"""JumpFPE - Generators Package

路径生成与系数序列：跳扩散方程的 Euler 模拟、路径集合、磨光与"杀死"序列。
"""

from .paths import (
    CHUNK_SIZE,
    PathSample,
    PathEnsemble,
    sample_jumps,
    simulate_path,
    simulate_ensemble,
    ensemble_fingerprint,
    marginal,
    require_no_aborted,
)
from .sequences import (
    MollifierScheme,
    mollifier,
    mollifier_constant,
    mollify_coefficients,
    gamma_seq,
    SequenceStrategy,
    MollifySequence,
    KillJumpsSequence,
    KillDiffusionSequence,
    KillBothSequence,
    SequenceBuilder,
    SequenceSpec,
    build_sequence,
    l1loc_discrepancy,
)

__all__ = [
    # 从 paths 模块导出的项
    "CHUNK_SIZE",
    "PathSample",
    "PathEnsemble",
    "sample_jumps",
    "simulate_path",
    "simulate_ensemble",
    "ensemble_fingerprint",
    "marginal",
    "require_no_aborted",

    # 从 sequences 模块导出的项
    "MollifierScheme",
    "mollifier",
    "mollifier_constant",
    "mollify_coefficients",
    "gamma_seq",
    "SequenceStrategy",
    "MollifySequence",
    "KillJumpsSequence",
    "KillDiffusionSequence",
    "KillBothSequence",
    "SequenceBuilder",
    "SequenceSpec",
    "build_sequence",
    "l1loc_discrepancy",
]
