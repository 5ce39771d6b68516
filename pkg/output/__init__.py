"""JumpFPE - Output Package

输出模块，负责把实验结果写成 JSON、CSV 与 NPZ 文件。
"""

from .report_writer import (
    TableData,
    ReportWriter,
    to_jsonable,
    density_table,
    paths_table,
    records_table,
)

__all__ = [
    'TableData',
    'ReportWriter',
    'to_jsonable',
    'density_table',
    'paths_table',
    'records_table',
]
