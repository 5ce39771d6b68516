"""JumpFPE - Report Writer Module
这个模块把实验结果写入输出目录：
- JSON 摘要与清单（非有限浮点数写成字符串）
- CSV 数据表（浮点数按 repr 写出，重复运行逐字节一致）
- 路径集合的 NPZ 二进制转储
所有文件先写临时文件再原子替换。
"""
import csv
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from core.grid import GridDensity1D

logger = logging.getLogger(__name__)


@dataclass
class TableData:
    """一张 CSV 表：列名与行（字典）"""
    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


def to_jsonable(value):
    """numpy 标量/数组转成 Python 值；inf/nan 写成字符串"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        if math.isfinite(number):
            return number
        return "nan" if math.isnan(number) else ("inf" if number > 0 else "-inf")
    return value


def _cell(value):
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


class ReportWriter:
    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: List[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def _atomic(self, filename: str, mode: str, write):
        path = os.path.join(self.out_dir, filename)
        fd, tmp = tempfile.mkstemp(prefix=f".{filename}.", dir=self.out_dir)
        try:
            with os.fdopen(fd, mode, **({"encoding": "utf-8", "newline": ""} if "b" not in mode else {})) as f:
                write(f)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        self.written.append(filename)
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, filename: str, data: Dict[str, Any]) -> str:
        text = json.dumps(to_jsonable(data), indent=2, sort_keys=True, ensure_ascii=False)
        return self._atomic(filename, "w", lambda f: f.write(text + "\n"))

    def write_table(self, table: TableData) -> str:
        def write(f):
            writer = csv.DictWriter(f, fieldnames=table.columns, lineterminator="\n")
            writer.writeheader()
            for row in table.rows:
                writer.writerow({k: _cell(row[k]) for k in table.columns})
        return self._atomic(table.filename, "w", write)

    def write_npz(self, filename: str, **arrays: np.ndarray) -> str:
        return self._atomic(filename, "wb", lambda f: np.savez_compressed(f, **arrays))


# ==================== 便捷构造 ====================

def density_table(name: str, density: GridDensity1D) -> TableData:
    """单元中心与密度值"""
    rows = [{"x_center": x, "v": v} for x, v in zip(density.grid.centers, density.v)]
    return TableData(name=name, columns=["x_center", "v"], rows=rows)


def paths_table(ensemble, n_paths: int) -> TableData:
    """前 n_paths 条路径的节点：(path_id, time, jump, x_j, x_j_pre)"""
    dims = range(ensemble.dim)
    columns = ["path_id", "time", "jump"] + [f"x{j}" for j in dims] + [f"x{j}_pre" for j in dims]
    rows = []
    for i in range(min(n_paths, ensemble.n_paths)):
        path = ensemble.path(i)
        for k in range(path.times.shape[0]):
            row = {"path_id": i, "time": path.times[k], "jump": int(path.jump_mask[k])}
            row.update({f"x{j}": path.values[k, j] for j in dims})
            row.update({f"x{j}_pre": path.pre_values[k, j] for j in dims})
            rows.append(row)
    return TableData(name="paths", columns=columns, rows=rows)


def records_table(name: str, records: Sequence[Dict[str, Any]]) -> TableData:
    columns = list(records[0].keys()) if records else []
    return TableData(name=name, columns=columns, rows=list(records))
