"""
JumpFPE - Experiment Configuration Module

实验配置的加载与校验。配置是一个 JSON 文档，结构固定：

    {
      "experiment": "superpose",
      "problem": "ou_jump",
      "params": {"theta": 1.0},
      "seed": 20240601,
      "settings": {"T": 1.0, "N": 100000, ...},
      "checks": {"max_w1": 0.02},
      "sequence": {"kind": "mollify", "n_values": [1, 2, 4]},   # 仅 limit
      "output": "runs/superpose"                                # 可选
    }

任何未知字段、缺失的必填字段、类型错误或越界的值都会抛出 ConfigError，
错误信息以字段路径开头（例如 "settings.N: ..."）。不会静默地使用默认值替换非法值。
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from core.catalog import default_catalog
from core.errors import ConfigError, UnknownKindError
from core.rng import UINT64_MAX
from generators.sequences import SequenceBuilder

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("simulate", "solve-fpe", "superpose", "defect", "limit", "moment-bound")
FPE_KINDS = ("solve-fpe", "superpose")
# 方差解析解只对线性漂移的问题成立
LINEAR_PROBLEMS = ("ou_jump", "cor39_ode", "thm41_additive")
TOP_LEVEL_KEYS = ("experiment", "problem", "params", "seed", "settings", "checks", "sequence", "output")

_REQUIRED = object()


@dataclass(frozen=True)
class FieldSpec:
    """一个配置字段：类型、默认值与取值范围"""

    kind: str                  # int / float / bool / floats / ints / interval / str
    default: object = None
    lo: float = -np.inf
    hi: float = np.inf
    open_lo: bool = False
    doc: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED

    def _number(self, path: str, value, integer: bool) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if integer and not (isinstance(value, int) or float(value).is_integer()):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        number = int(value) if integer else float(value)
        if not np.isfinite(number):
            raise ConfigError(path, "must be finite")
        below = number <= self.lo if self.open_lo else number < self.lo
        if below or number > self.hi:
            bracket = "(" if self.open_lo else "["
            raise ConfigError(path, f"{number} outside {bracket}{self.lo}, {self.hi}]")
        return number

    def parse(self, path: str, value):
        if value is None and not self.required and self.default is None:
            return None
        if self.kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(path, f"expected true/false, got {value!r}")
            return value
        if self.kind == "str":
            if not isinstance(value, str) or not value:
                raise ConfigError(path, f"expected a non-empty string, got {value!r}")
            return value
        if self.kind in ("int", "float"):
            return self._number(path, value, self.kind == "int")
        if not isinstance(value, list) or not value:
            raise ConfigError(path, f"expected a non-empty list, got {value!r}")
        items = [self._number(f"{path}[{i}]", v, self.kind == "ints") for i, v in enumerate(value)]
        if self.kind == "interval":
            if len(items) != 2 or not items[0] < items[1]:
                raise ConfigError(path, f"expected [lo, hi] with lo < hi, got {value!r}")
        return items


def _f(default=None, lo=-np.inf, hi=np.inf, open_lo=False, doc=""):
    return FieldSpec("float", default, lo, hi, open_lo, doc)


def _i(default=None, lo=-np.inf, hi=np.inf, doc=""):
    return FieldSpec("int", default, lo, hi, False, doc)


SETTINGS: Dict[str, FieldSpec] = {
    "T": _f(_REQUIRED, 0.0, 1e4, open_lo=True, doc="horizon"),
    "n_steps": _i(100, 1, 10**7, doc="uniform Euler steps on [0, T]"),
    "N": _i(10000, 2, 10**8, doc="number of paths"),
    "workers": _i(1, 1, 1024, doc="simulation threads"),
    "checkpoints": FieldSpec("floats", None, 0.0, 1e4, doc="times of interest, default [T]"),
    "x_min": _f(-8.0, doc="left end of the FPE domain"),
    "x_max": _f(8.0, doc="right end of the FPE domain"),
    "n_cells": _i(1600, 8, 10**7, doc="FPE cells"),
    "dt": _f(None, 0.0, np.inf, open_lo=True, doc="FPE time step, default CFL-adaptive"),
    "safety": _f(0.95, 0.0, 1.0, open_lo=True, doc="fraction of the CFL limit"),
    "max_dt": _f(1e-3, 0.0, np.inf, open_lo=True, doc="cap on the CFL-adaptive FPE step"),
    "refine": FieldSpec("bool", False, doc="also solve with halved dx and dt"),
    "s": _f(_REQUIRED, 0.0, 1e4, doc="defect window start"),
    "t": _f(_REQUIRED, 0.0, 1e4, open_lo=True, doc="defect window end"),
    "drift_offset": _f(0.0, 0.0, 1e3, doc="negative control: drift perturbation of the generator"),
    "dump_paths": _i(0, 0, 10**6, doc="paths written to paths.csv"),
    "box": FieldSpec("interval", [-1.0, 1.0], doc="L1 discrepancy box"),
    "t_window": FieldSpec("interval", None, 0.0, 1e4, doc="L1 discrepancy time window, default [0, T]"),
    "n_quad": _i(64, 16, 10**5, doc="L1 discrepancy panels"),
}

CHECKS: Dict[str, FieldSpec] = {
    "max_aborted": _i(None, 0, 10**8),
    "max_w1_oracle": _f(None, 0.0, open_lo=True),
    "max_seconds": _f(None, 0.0, open_lo=True),
    "conservation_tol": _f(None, 0.0, open_lo=True),
    "max_leak": _f(None, 0.0, 1.0),
    "max_weak_residual": _f(None, 0.0, open_lo=True),
    "weak_halving_tol": _f(None, 0.0, 1.0, open_lo=True),
    "max_w1": _f(None, 0.0, open_lo=True),
    "n_sigma": _f(None, 0.0, open_lo=True),
    "slack": _f(None, 0.0),
    "min_negative_detection": _f(None, 0.0, 1.0),
    "noise_factor": _f(None, 0.0, open_lo=True),
    "monotone_factor": _f(None, 0.0, open_lo=True),
    "max_variance_factor": _f(None, 0.0, open_lo=True),
    "l1_monotone": FieldSpec("bool", None),
    "min_slack": _f(None, 0.0, open_lo=True),
}

SEQUENCE: Dict[str, FieldSpec] = {
    "kind": FieldSpec("str", _REQUIRED),
    "n_values": FieldSpec("ints", _REQUIRED, 1, 10**6),
    "n_nodes": _i(32, 2, 256),
}

_SIM = ("T", "n_steps", "N", "workers")
_FPE = ("x_min", "x_max", "n_cells", "dt", "safety", "max_dt")

SETTINGS_BY_KIND: Dict[str, tuple] = {
    "simulate": _SIM + ("checkpoints", "dump_paths"),
    "solve-fpe": ("T",) + _FPE + ("checkpoints", "refine"),
    "superpose": _SIM + _FPE + ("checkpoints",),
    "defect": _SIM + ("s", "t", "drift_offset"),
    "limit": _SIM + ("checkpoints", "box", "t_window", "n_quad"),
    "moment-bound": _SIM,
}

CHECKS_BY_KIND: Dict[str, tuple] = {
    "simulate": ("max_aborted", "max_w1_oracle", "max_seconds"),
    "solve-fpe": ("conservation_tol", "max_leak", "max_weak_residual", "weak_halving_tol", "max_seconds"),
    "superpose": ("max_w1", "conservation_tol", "max_leak", "max_aborted", "max_seconds"),
    "defect": ("n_sigma", "slack", "min_negative_detection", "max_aborted"),
    "limit": ("noise_factor", "monotone_factor", "max_variance_factor", "l1_monotone"),
    "moment-bound": ("min_slack", "max_aborted"),
}


@dataclass
class ExperimentConfig:
    """校验后的实验配置；settings/checks 已按类型解析并补全默认值"""

    experiment: str
    problem: str
    params: Dict[str, float]
    seed: int
    settings: Dict[str, object]
    checks: Dict[str, object] = field(default_factory=dict)
    sequence: Optional[Dict[str, object]] = None
    output: Optional[str] = None
    source: Optional[str] = None

    @property
    def checkpoints(self) -> List[float]:
        return list(self.settings.get("checkpoints") or [self.settings["T"]])

    def with_overrides(self, seed: Optional[int] = None, workers: Optional[int] = None,
                       output: Optional[str] = None) -> "ExperimentConfig":
        settings = dict(self.settings)
        if workers is not None:
            settings["workers"] = SETTINGS["workers"].parse("--workers", workers)
        return ExperimentConfig(
            experiment=self.experiment, problem=self.problem, params=dict(self.params),
            seed=_parse_seed("--seed", seed) if seed is not None else self.seed,
            settings=settings, checks=dict(self.checks),
            sequence=dict(self.sequence) if self.sequence else None,
            output=output if output is not None else self.output, source=self.source,
        )

    def to_dict(self) -> Dict[str, object]:
        """完整解析后的配置（复现片段）；再次加载得到同一个配置"""
        data: Dict[str, object] = {
            "experiment": self.experiment,
            "problem": self.problem,
            "params": dict(self.params),
            "seed": self.seed,
            "settings": {k: v for k, v in self.settings.items() if v is not None},
            "checks": {k: v for k, v in self.checks.items() if v is not None},
        }
        if self.sequence is not None:
            data["sequence"] = dict(self.sequence)
        return data


def _parse_seed(path: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"seed must be an unsigned 64-bit integer, got {value!r}")
    if not 0 <= value <= UINT64_MAX:
        raise ConfigError(path, f"seed {value} outside [0, 2^64 - 1]")
    return int(value)


def _parse_block(block, allowed: tuple, table: Dict[str, FieldSpec], prefix: str) -> Dict[str, object]:
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError(prefix, f"expected an object, got {type(block).__name__}")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", f"unknown key; allowed: {sorted(allowed)}")
    parsed = {}
    for key in allowed:
        spec = table[key]
        if key not in block:
            if spec.required:
                raise ConfigError(f"{prefix}.{key}", "missing required key")
            parsed[key] = spec.default
        else:
            parsed[key] = spec.parse(f"{prefix}.{key}", block[key])
    return parsed


def _has_terminal_oracle(entry, params: Dict[str, object]) -> bool:
    """终端分布有解析解：点初值的 cpoisson（泊松级数），以及一维 zero（分布不变）"""
    if entry.name == "cpoisson":
        _, mu0 = entry.build(params)
        return mu0.kind == "point"
    if entry.name == "zero":
        cs, _ = entry.build(params)
        return cs.dim == 1
    return False


def _check_consistency(experiment: str, entry, params: Dict[str, object], settings: Dict[str, object],
                       checks: Dict[str, object], sequence):
    """跨字段约束；在任何计算开始之前拒绝无法满足的检查项"""
    T = settings["T"]
    if checks.get("max_w1_oracle") is not None and not _has_terminal_oracle(entry, params):
        raise ConfigError("checks.max_w1_oracle", f"problem '{entry.name}' with these params has no "
                                                  f"terminal-law oracle")
    if checks.get("weak_halving_tol") is not None and not settings.get("refine"):
        raise ConfigError("checks.weak_halving_tol", "needs settings.refine = true")
    if checks.get("max_variance_factor") is not None and entry.name not in LINEAR_PROBLEMS:
        raise ConfigError("checks.max_variance_factor",
                          f"variance oracle needs a linear-drift problem {LINEAR_PROBLEMS}")
    if checks.get("l1_monotone") and sequence is not None and sequence["kind"] != "mollify":
        raise ConfigError("checks.l1_monotone", "only mollify sequences have a discrepancy table")
    checkpoints = settings.get("checkpoints")
    if checkpoints:
        for i, c in enumerate(checkpoints):
            if c > T:
                raise ConfigError(f"settings.checkpoints[{i}]", f"{c} lies outside [0, T={T}]")
    if "x_min" in settings and not settings["x_min"] < settings["x_max"]:
        raise ConfigError("settings.x_max", "must exceed settings.x_min")
    if experiment == "defect":
        if not settings["s"] < settings["t"]:
            raise ConfigError("settings.s", f"need s < t, got s={settings['s']}, t={settings['t']}")
        if settings["t"] > T:
            raise ConfigError("settings.t", f"{settings['t']} exceeds T={T}")
    if settings.get("dump_paths", 0) > settings.get("N", 0):
        raise ConfigError("settings.dump_paths", "cannot exceed settings.N")
    window = settings.get("t_window")
    if window is not None and window[1] > T:
        raise ConfigError("settings.t_window", f"must lie inside [0, T={T}]")
    if checks.get("min_negative_detection") is not None and not settings.get("drift_offset"):
        raise ConfigError("checks.min_negative_detection", "needs settings.drift_offset > 0")
    if sequence is not None:
        if sequence["kind"] not in SequenceBuilder.get_available_strategies():
            raise ConfigError("sequence.kind", f"unknown sequence kind '{sequence['kind']}'; "
                                               f"available: {SequenceBuilder.get_available_strategies()}")
        values = sequence["n_values"]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sequence.n_values", f"must be strictly increasing, got {values}")


def parse_config(data, source: Optional[str] = None) -> ExperimentConfig:
    """把 JSON 对象解析为 ExperimentConfig"""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(key, f"unknown key; allowed: {list(TOP_LEVEL_KEYS)}")
    for key in ("experiment", "problem", "seed", "settings"):
        if key not in data:
            raise ConfigError(key, "missing required key")

    experiment = data["experiment"]
    if experiment not in EXPERIMENT_KINDS:
        raise ConfigError("experiment", f"unknown experiment '{experiment}'; available: {list(EXPERIMENT_KINDS)}")

    problem = data["problem"]
    if not isinstance(problem, str):
        raise ConfigError("problem", f"expected a problem name, got {problem!r}")
    try:
        entry = default_catalog().get(problem)
    except UnknownKindError as e:
        raise ConfigError("problem", str(e)) from e
    if experiment in FPE_KINDS and not entry.fpe_capable:
        raise ConfigError("problem", f"'{problem}' has no FPE discretisation; use a Monte Carlo experiment")

    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params", "expected an object")
    resolved_params = entry.resolve(params)
    if experiment != "simulate" and experiment != "moment-bound":
        cs, _ = entry.build(resolved_params)
        if cs.dim != 1:
            raise ConfigError("problem", f"'{problem}' is {cs.dim}-D; {experiment} needs a 1-D problem")

    settings = _parse_block(data["settings"], SETTINGS_BY_KIND[experiment], SETTINGS, "settings")
    checks = _parse_block(data.get("checks"), CHECKS_BY_KIND[experiment], CHECKS, "checks")

    sequence = None
    if experiment == "limit":
        if "sequence" not in data:
            raise ConfigError("sequence", "limit experiments need a sequence block")
        sequence = _parse_block(data["sequence"], tuple(SEQUENCE), SEQUENCE, "sequence")
    elif "sequence" in data:
        raise ConfigError("sequence", f"only limit experiments take a sequence block, not '{experiment}'")

    output = data.get("output")
    if output is not None and (not isinstance(output, str) or not output):
        raise ConfigError("output", f"expected a directory path, got {output!r}")

    _check_consistency(experiment, entry, resolved_params, settings, checks, sequence)
    config = ExperimentConfig(experiment=experiment, problem=problem, params=resolved_params,
                              seed=_parse_seed("seed", data["seed"]), settings=settings, checks=checks,
                              sequence=sequence, output=output, source=source)
    logger.debug(f"Parsed config: {experiment} on '{problem}' (seed {config.seed})")
    return config


def load_config(path: str) -> ExperimentConfig:
    """读取并校验配置文件；JSON 语法错误报告行号与列号"""
    if not os.path.exists(path):
        raise ConfigError("<file>", f"config file '{path}' not found")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno} column {e.colno}", e.msg) from e
    logger.debug(f"Loaded config from: {path}")
    return parse_config(data, source=path)
