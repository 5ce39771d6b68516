"""JumpFPE - Core Errors Module

统一的异常层级。所有异常都继承自 ValueError，调用方可以只捕获 ValueError。
"""

from typing import Optional


class JumpFPEError(ValueError):
    """所有领域异常的基类"""


class CoefficientError(JumpFPEError):
    """系数集合不合法（维度、增长常数、跳跃测度等）"""


class PathOverflowError(JumpFPEError):
    """样本路径出现非有限值"""

    def __init__(self, message: str, path_index: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.path_index = path_index
        self.time = time


class CFLViolation(JumpFPEError):
    """显式格式的时间步长超过稳定性上限"""

    def __init__(self, dt: float, required_dt: float):
        super().__init__(
            f"CFL condition violated: dt={dt:.6g} exceeds the stable limit {required_dt:.6g}; "
            f"use dt <= {required_dt:.6g}"
        )
        self.dt = dt
        self.required_dt = required_dt


class SupportMarginError(JumpFPEError):
    """测试函数支撑离计算区域边界太近"""


class LeakedMassError(JumpFPEError):
    """网格密度从边界流失的质量过多"""


class DimensionMismatchError(JumpFPEError):
    """经验分布或状态维度不匹配"""


class UnknownKindError(JumpFPEError):
    """注册表中找不到的名称（序列类型、实验类型、问题名）"""


class ConfigError(JumpFPEError):
    """实验配置不合法，field 为出错字段路径"""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
