"""
JumpFPE - Problem Catalog Module

内置问题目录。每个条目由名称 + 参数表描述，构造出系数集合与初始分布，
并记录它满足的假设。注册时在默认参数上抽查增长条件，不满足的条目无法注册。
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from core.coefficients import CoefficientSet, additive_jump, validate_coefficients
from core.errors import CoefficientError, ConfigError, UnknownKindError
from core.laws import InitialLaw
from core.measures import MarkMeasure

logger = logging.getLogger(__name__)

REGISTRATION_PROBES = 512

Builder = Callable[[Dict[str, float]], Tuple[CoefficientSet, InitialLaw]]


@dataclass(frozen=True)
class ParamSpec:
    """参数默认值与取值范围（闭区间）"""

    default: float
    lo: float = -np.inf
    hi: float = np.inf
    doc: str = ""

    def check(self, name: str, value) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"params.{name}", f"expected a number, got {value!r}")
        value = float(value)
        if not np.isfinite(value) or value < self.lo or value > self.hi:
            raise ConfigError(f"params.{name}", f"{value} outside [{self.lo}, {self.hi}]")
        return value


@dataclass
class ProblemCatalogEntry:
    """目录条目：参数 -> (CoefficientSet, InitialLaw)"""

    name: str
    description: str
    parameters: Dict[str, ParamSpec]
    builder: Builder = field(repr=False)
    assumptions: List[str] = field(default_factory=list)
    fpe_capable: bool = True

    def resolve(self, params: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
        params = dict(params or {})
        unknown = sorted(set(params) - set(self.parameters))
        if unknown:
            raise ConfigError(f"params.{unknown[0]}",
                              f"unknown parameter for problem '{self.name}'; known: {sorted(self.parameters)}")
        return {key: spec.check(key, params.get(key, spec.default)) for key, spec in self.parameters.items()}

    def build(self, params: Optional[Mapping[str, float]] = None) -> Tuple[CoefficientSet, InitialLaw]:
        resolved = self.resolve(params)
        cs, mu0 = self.builder(resolved)
        return cs.replace(name=self.name, params=resolved), mu0

    def listing(self) -> str:
        lines = [f"{self.name}: {self.description}"]
        for key, spec in self.parameters.items():
            lines.append(f"    {key} = {spec.default:g}  range [{spec.lo:g}, {spec.hi:g}]  {spec.doc}".rstrip())
        for item in self.assumptions:
            lines.append(f"    assumes: {item}")
        if not self.fpe_capable:
            lines.append("    note: state-dependent jumps, Monte Carlo only")
        return "\n".join(lines)


# ==================== 系数构件 ====================

def linear_drift(theta: float, offset: float = 0.0):
    def drift(t, x):
        return -theta * x + offset
    return drift


def constant_diffusion(sigma: float, dim: int = 1):
    def diffusion(t, x):
        return np.broadcast_to(sigma * np.eye(dim), (x.shape[0], dim, dim)).copy()
    return diffusion


def zero_drift(t, x):
    return np.zeros_like(x)


def _initial(params: Dict[str, float], loc_key: str = "x0", scale_key: Optional[str] = None,
             dim: int = 1) -> InitialLaw:
    scale = params.get(scale_key, 0.0) if scale_key else 0.0
    if scale > 0:
        return InitialLaw(kind="gaussian", loc=params[loc_key], scale=scale, dim=dim)
    return InitialLaw(kind="point", loc=params[loc_key], dim=dim)


def _jump_constant(lam: float, h: float) -> float:
    """Σ w|u|^2 = λh^2；为 0 时取 1 保持常数为正"""
    value = lam * h * h
    return value if value > 0 else 1.0


def _ou_jump(p):
    nu = MarkMeasure.dirac(p["h"], p["lam"])
    cs = CoefficientSet(drift=linear_drift(p["theta"]), diffusion=constant_diffusion(p["sigma"]),
                        jump_scale=p["gamma"], jump_amplitude=additive_jump, nu=nu,
                        C1=max(p["theta"], p["sigma"], 1e-12), C2=_jump_constant(p["lam"], p["h"]),
                        additive_jumps=True)
    return cs, _initial(p, "m0", "s0")


def _zero(p):
    cs = CoefficientSet(drift=zero_drift, diffusion=constant_diffusion(0.0), jump_scale=0.0,
                        jump_amplitude=additive_jump, nu=MarkMeasure.zero(), C1=1.0, C2=1.0,
                        additive_jumps=True)
    return cs, _initial(p, "x0", "s0")


def _bm(p):
    cs = CoefficientSet(drift=zero_drift, diffusion=constant_diffusion(p["sigma"]), jump_scale=0.0,
                        jump_amplitude=additive_jump, nu=MarkMeasure.zero(), C1=max(p["sigma"], 1e-12),
                        C2=1.0, additive_jumps=True)
    return cs, _initial(p, "x0", "s0")


def _cpoisson(p):
    nu = MarkMeasure.dirac(p["h"], p["lam"])
    cs = CoefficientSet(drift=zero_drift, diffusion=constant_diffusion(0.0), jump_scale=p["gamma"],
                        jump_amplitude=additive_jump, nu=nu, C1=1.0, C2=_jump_constant(p["lam"], p["h"]),
                        additive_jumps=True)
    return cs, _initial(p, "x0", "s0")


def _rough_drift(p):
    def drift(t, x):
        return np.minimum(np.abs(x), p["cap"]) - 1.0

    nu = MarkMeasure.dirac(p["h"], p["lam"])
    cs = CoefficientSet(drift=drift, diffusion=constant_diffusion(p["sigma"]), jump_scale=p["gamma"],
                        jump_amplitude=additive_jump, nu=nu,
                        C1=max(p["cap"], 1.0) + p["sigma"], C2=_jump_constant(p["lam"], p["h"]),
                        additive_jumps=True)
    return cs, _initial(p, "x0", "s0")


def _thm41_additive(p):
    # ∫γu Ñ(dt,du) = ∫γu N(dt,du) - γλh dt：补偿项并入漂移
    nu = MarkMeasure.dirac(p["h"], p["lam"])
    compensation = p["gamma"] * float(nu.mean_mark()[0]) if nu.n_atoms else 0.0
    cs = CoefficientSet(drift=linear_drift(p["theta"], -compensation), diffusion=constant_diffusion(p["sigma"]),
                        jump_scale=p["gamma"], jump_amplitude=additive_jump, nu=nu,
                        C1=max(p["theta"], abs(compensation) + p["sigma"], 1e-12),
                        C2=_jump_constant(p["lam"], p["h"]), additive_jumps=True)
    return cs, _initial(p, "m0", "s0")


def _state_jump(p):
    def amplitude(t, x, u):
        return u * (1.0 + np.abs(x)) / 2.0

    nu = MarkMeasure.dirac(p["h"], p["lam"])
    cs = CoefficientSet(drift=linear_drift(p["theta"]), diffusion=constant_diffusion(p["sigma"]),
                        jump_scale=p["gamma"], jump_amplitude=amplitude, nu=nu,
                        C1=max(p["theta"], p["sigma"], 1e-12),
                        C2=max(p["lam"] * p["h"] ** 2 / 4.0, 1e-12), additive_jumps=False)
    return cs, _initial(p, "x0")


def _ou_jump_2d(p):
    nu = MarkMeasure.dirac([p["h"], 0.0], p["lam"])
    cs = CoefficientSet(drift=linear_drift(p["theta"]), diffusion=constant_diffusion(p["sigma"], dim=2),
                        jump_scale=p["gamma"], jump_amplitude=additive_jump, nu=nu,
                        C1=max(p["theta"] + np.sqrt(2.0) * p["sigma"], 1e-12),
                        C2=_jump_constant(p["lam"], p["h"]), dim=2, noise_dim=2, additive_jumps=True)
    return cs, _initial(p, "x0", dim=2)


_JUMP_PARAMS = {
    "gamma": ParamSpec(1.0, -10.0, 10.0, "jump scale γ"),
    "lam": ParamSpec(1.0, 0.0, 100.0, "intensity λ = ν(U)"),
    "h": ParamSpec(0.5, -10.0, 10.0, "atom location of ν = λδ_h"),
}


def _entries() -> List[ProblemCatalogEntry]:
    return [
        ProblemCatalogEntry(
            name="zero",
            description="b = σ = 0, no jumps; X_t = X_0",
            parameters={"x0": ParamSpec(0.0, -100.0, 100.0, "initial location"),
                        "s0": ParamSpec(0.0, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_zero,
            assumptions=["(H_b,σ) with C1 = 1", "(H_f) with C2 = 1"],
        ),
        ProblemCatalogEntry(
            name="bm",
            description="Brownian motion: b = 0, σ constant, no jumps",
            parameters={"sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        "x0": ParamSpec(0.0, -100.0, 100.0, "initial location"),
                        "s0": ParamSpec(0.0, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_bm,
            assumptions=["(H_b,σ) with C1 = σ"],
        ),
        ProblemCatalogEntry(
            name="cpoisson",
            description="compound Poisson: b = σ = 0, g = u, ν = λδ_h",
            parameters={**_JUMP_PARAMS, "lam": ParamSpec(3.0, 0.0, 100.0, "intensity λ"),
                        "h": ParamSpec(0.7, -10.0, 10.0, "jump size"),
                        "x0": ParamSpec(0.0, -100.0, 100.0, "initial location"),
                        "s0": ParamSpec(0.0, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_cpoisson,
            assumptions=["(H_f) with C2 = λh²", "additive jumps f = γu"],
        ),
        ProblemCatalogEntry(
            name="ou_jump",
            description="OU with jumps: b = -θx, σ constant, g = u, ν = λδ_h",
            parameters={"theta": ParamSpec(1.0, 0.0, 100.0, "mean reversion θ"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        **_JUMP_PARAMS,
                        "m0": ParamSpec(0.0, -100.0, 100.0, "initial mean"),
                        "s0": ParamSpec(0.5, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_ou_jump,
            assumptions=["(H_b,σ) with C1 = max(θ, σ)", "(H_f) with C2 = λh²", "additive jumps f = γu",
                         "smooth coefficients: BV/Sobolev hypotheses hold"],
        ),
        ProblemCatalogEntry(
            name="rough_drift",
            description="Lipschitz but non-smooth drift: b = min(|x|, cap) - 1, σ constant, ν = λδ_h",
            parameters={"cap": ParamSpec(2.0, 0.0, 100.0, "drift cap"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        **_JUMP_PARAMS,
                        "x0": ParamSpec(0.0, -100.0, 100.0, "initial location"),
                        "s0": ParamSpec(0.0, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_rough_drift,
            assumptions=["(H_b,σ) with C1 = max(cap, 1) + σ", "(H_f) with C2 = λh²",
                         "b continuous in x (mollification applies)",
                         "uniform density bound for mollified laws: assumed"],
        ),
        ProblemCatalogEntry(
            name="cor39_ode",
            description="linear drift b = -θx for the kill-both limit σⁿ = (1/n)·I, γⁿ = γ/n -> x' = -θx",
            parameters={"theta": ParamSpec(1.0, 0.0, 100.0, "mean reversion θ"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "base diffusion σ (replaced along the sequence)"),
                        **_JUMP_PARAMS,
                        "x0": ParamSpec(1.0, -100.0, 100.0, "initial location")},
            builder=lambda p: _ou_jump({**p, "m0": p["x0"], "s0": 0.0}),
            assumptions=["(H_b,σ) with C1 = max(θ, σ)", "limit is the ODE x' = -θx",
                         "smooth coefficients: BV/Sobolev hypotheses hold"],
        ),
        ProblemCatalogEntry(
            name="thm41_additive",
            description="compensated-measure SDE dX = -θX dt + σ dB + ∫γu Ñ(dt,du), drift carries -γλh",
            parameters={"theta": ParamSpec(1.0, 0.0, 100.0, "mean reversion θ"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        **_JUMP_PARAMS,
                        "m0": ParamSpec(0.0, -100.0, 100.0, "initial mean"),
                        "s0": ParamSpec(0.5, 0.0, 10.0, "initial std (0 = point mass)")},
            builder=_thm41_additive,
            assumptions=["additive jumps f = γu", "(H_b,σ) with C1 = max(θ, γλ|h| + σ)", "(H_f) with C2 = λh²"],
        ),
        ProblemCatalogEntry(
            name="state_jump",
            description="state-dependent jumps g = u(1+|x|)/2 with b = -θx, σ constant",
            parameters={"theta": ParamSpec(1.0, 0.0, 100.0, "mean reversion θ"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        **_JUMP_PARAMS,
                        "x0": ParamSpec(0.0, -100.0, 100.0, "initial location")},
            builder=_state_jump,
            assumptions=["(H_f) with C2 = λh²/4"],
            fpe_capable=False,
        ),
        ProblemCatalogEntry(
            name="ou_jump_2d",
            description="2-D OU with jumps along the first axis: b = -θx, σ = σI, ν = λδ_(h,0)",
            parameters={"theta": ParamSpec(1.0, 0.0, 100.0, "mean reversion θ"),
                        "sigma": ParamSpec(1.0, 0.0, 10.0, "diffusion σ"),
                        **_JUMP_PARAMS,
                        "x0": ParamSpec(0.0, -100.0, 100.0, "initial location (both axes)")},
            builder=_ou_jump_2d,
            assumptions=["(H_b,σ) with C1 = θ + √2σ", "(H_f) with C2 = λh²"],
            fpe_capable=False,
        ),
    ]


class ProblemCatalog:
    """问题目录，条目在注册时校验"""

    def __init__(self):
        self._entries: Dict[str, ProblemCatalogEntry] = {}

    def register(self, entry: ProblemCatalogEntry, validate: bool = True):
        if validate:
            cs, _ = entry.build()
            report = validate_coefficients(cs, n_probe=REGISTRATION_PROBES, seed=0)
            if report.violation:
                raise CoefficientError(f"catalog entry '{entry.name}' violates its growth constants: "
                                       f"{report.witness_b_sigma or report.witness_jump}")
        self._entries[entry.name] = entry

    def get(self, name: str) -> ProblemCatalogEntry:
        if name not in self._entries:
            raise UnknownKindError(f"unknown problem '{name}'; available: {self.names()}")
        return self._entries[name]

    def names(self) -> List[str]:
        return sorted(self._entries)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def listing(self) -> str:
        return "\n".join(self._entries[name].listing() for name in self.names())


_CATALOG: Optional[ProblemCatalog] = None


def default_catalog() -> ProblemCatalog:
    """惰性构建的内置目录"""
    global _CATALOG
    if _CATALOG is None:
        catalog = ProblemCatalog()
        for entry in _entries():
            catalog.register(entry)
        _CATALOG = catalog
    return _CATALOG


def catalog_list() -> str:
    """确定性的目录文本"""
    return default_catalog().listing()
