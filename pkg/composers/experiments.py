"""
JumpFPE - Experiment Runners

六类实验的执行器，每一类对应一个策略类：
- simulate：模拟路径集合，报告边缘分布统计并与解析解比较
- solve-fpe：网格求解 Fokker–Planck 方程，检查守恒、正性与弱形式恒等式
- superpose：蒙特卡洛边缘分布与 FPE 密度之间的 W1 距离
- defect：鞅问题缺陷字典扫描（含扰动生成元的反向对照）
- limit：系数序列收敛实验
- moment-bound：最大值一阶矩估计检验

run() 负责把结果写入输出目录并给出退出码。
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from core.catalog import ProblemCatalogEntry, default_catalog
from core.coefficients import CoefficientSet, validate_coefficients
from core.config import ExperimentConfig
from core.errors import SupportMarginError, UnknownKindError
from core.grid import Grid1D
from core.laws import InitialLaw
from core.test_functions import path_functional_dictionary, test_function_dictionary
from composers.convergence import discrepancy_series, is_non_increasing, limit_experiment
from generators.paths import PathEnsemble, marginal, simulate_ensemble
from generators.sequences import SequenceSpec, gamma_seq
from output.report_writer import (ReportWriter, TableData, density_table, paths_table,
                                  records_table)
from probes.distances import w1_against_density, wasserstein1
from probes.martingale import martingale_defects
from probes.moments import lambda_moment, moment_bound_check
from solvers.fpe import initial_density, solve_fpe, weak_form_residual
from solvers.oracles import ou_jump_mean, ou_jump_variance, poisson_series_atoms, poisson_series_density

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

VALIDATION_PROBES = 1000


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: object
    threshold: object

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "passed": bool(self.passed), "observed": self.observed,
                "threshold": self.threshold}


@dataclass
class ExperimentResult:
    """实验输出：摘要、CSV 表、附加 JSON 文档、NPZ 数组与检查结果"""

    kind: str
    summary: Dict[str, object] = field(default_factory=dict)
    tables: List[TableData] = field(default_factory=list)
    documents: Dict[str, Dict[str, object]] = field(default_factory=dict)
    arrays: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check_at_most(self, checks: Dict[str, object], name: str, observed: float):
        threshold = checks.get(name)
        if threshold is not None:
            self.checks.append(CheckResult(name, observed <= threshold, observed, threshold))

    def check_at_least(self, checks: Dict[str, object], name: str, observed: float):
        threshold = checks.get(name)
        if threshold is not None:
            self.checks.append(CheckResult(name, observed >= threshold, observed, threshold))


# ==================== 辅助函数 ====================

def _simulate(config: ExperimentConfig, cs: CoefficientSet, mu0: InitialLaw,
              seed: Optional[int] = None) -> PathEnsemble:
    s = config.settings
    return simulate_ensemble(cs, mu0, s["T"], s["n_steps"], s["N"],
                             config.seed if seed is None else seed, workers=s["workers"])


def _solve(config: ExperimentConfig, cs: CoefficientSet, mu0: InitialLaw, refine: int = 1):
    s = config.settings
    grid = Grid1D(s["x_min"], s["x_max"], s["n_cells"] * refine)
    dt = s["dt"] / refine if s["dt"] is not None else None
    return solve_fpe(cs, initial_density(mu0, grid), s["T"], dt=dt, checkpoints=config.checkpoints,
                     safety=s["safety"], max_dt=s["max_dt"] / refine)


def _aborted_summary(ensemble: PathEnsemble) -> Dict[str, object]:
    first = sorted(ensemble.aborted.items())[:5]
    return {"n_paths": ensemble.n_paths, "n_aborted": ensemble.n_aborted,
            "aborted_examples": {str(i): msg for i, msg in first},
            "mean_jumps": float(ensemble.jump_counts.mean()), "fingerprint": ensemble.fingerprint}


def _variance0(mu0: InitialLaw) -> float:
    return mu0.scale**2 if mu0.kind == "gaussian" else 0.0


def _offset_drift(cs: CoefficientSet, offset: float):
    def drift(t, x):
        return cs.b(t, x) + offset
    return drift


def _conservation(trajectory) -> Tuple[float, float]:
    error = max(d.conservation_error() for d in trajectory)
    return error, trajectory.densities[-1].leaked_mass


def _trajectory_table(trajectory) -> TableData:
    records = trajectory.manifest()
    for record, density in zip(records, trajectory):
        record["lambda_moment_1"] = lambda_moment(density, 1)
    return records_table("trajectory", records)


class ExperimentStrategy(ABC):
    """实验策略抽象基类"""

    kind = "abstract"

    def __init__(self, entry: ProblemCatalogEntry):
        self.entry = entry

    @abstractmethod
    def run(self, config: ExperimentConfig, cs: CoefficientSet, mu0: InitialLaw) -> ExperimentResult:
        pass


# ==================== simulate ====================

class SimulateExperiment(ExperimentStrategy):
    kind = "simulate"

    def _oracle_distance(self, config, cs, mu0, ensemble, law_T) -> Optional[float]:
        """与终端分布解析解的 W1；没有解析解时返回 None"""
        p = config.params
        T = config.settings["T"]
        if self.entry.name == "cpoisson" and mu0.kind == "point":
            atoms, probs = poisson_series_atoms(p["lam"], T, p["gamma"] * p["h"], p["x0"])
            return float(stats.wasserstein_distance(law_T.samples, atoms, None, probs))
        if self.entry.name == "zero" and cs.dim == 1:
            return wasserstein1(law_T, marginal(ensemble, 0.0))
        return None

    def _moment_oracle(self, config, mu0, t) -> Optional[Dict[str, float]]:
        if self.entry.name not in ("ou_jump", "thm41_additive"):
            return None
        p = config.params
        rate = 0.0 if self.entry.name == "thm41_additive" else p["gamma"] * p["lam"] * p["h"]
        return {"mean": ou_jump_mean(p["m0"], p["theta"], rate, t),
                "var": ou_jump_variance(_variance0(mu0), p["theta"], p["sigma"],
                                        p["gamma"]**2 * p["lam"] * p["h"]**2, t)}

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        start = time.perf_counter()
        ensemble = _simulate(config, cs, mu0)
        elapsed = time.perf_counter() - start

        rows = []
        oracles = {}
        for t in config.checkpoints:
            law = marginal(ensemble, t)
            samples = law.samples.reshape(law.size, -1)
            for j in range(samples.shape[1]):
                column = samples[:, j]
                rows.append({"t": t, "component": j, "n_samples": law.size, "mean": float(column.mean()),
                             "var": float(column.var(ddof=1)) if law.size > 1 else 0.0,
                             "stderr": float(column.std(ddof=1) / np.sqrt(law.size)) if law.size > 1 else 0.0})
            oracle = self._moment_oracle(config, mu0, t)
            if oracle is not None:
                oracles[str(t)] = oracle
        result.tables.append(TableData(name="marginals",
                                       columns=["t", "component", "n_samples", "mean", "var", "stderr"],
                                       rows=rows))

        law_T = marginal(ensemble, config.settings["T"])
        w1_oracle = self._oracle_distance(config, cs, mu0, ensemble, law_T)
        result.summary.update(_aborted_summary(ensemble))
        result.summary.update({"seconds": elapsed, "w1_oracle": w1_oracle, "moment_oracle": oracles or None})

        if config.settings["dump_paths"]:
            k = config.settings["dump_paths"]
            result.tables.append(paths_table(ensemble, k))
            result.arrays["ensemble.npz"] = {
                "times": ensemble.times[:k], "values": ensemble.values[:k],
                "pre_values": ensemble.pre_values[:k], "jump_mask": ensemble.jump_mask[:k],
                "lengths": ensemble.lengths[:k],
            }

        checks = config.checks
        result.check_at_most(checks, "max_aborted", ensemble.n_aborted)
        result.check_at_most(checks, "max_seconds", elapsed)
        if w1_oracle is not None:
            result.check_at_most(checks, "max_w1_oracle", w1_oracle)
        return result


# ==================== solve-fpe ====================

class SolveFpeExperiment(ExperimentStrategy):
    kind = "solve-fpe"

    @staticmethod
    def _residuals(trajectory, cs, T) -> List[Dict[str, object]]:
        rows = []
        for phi in test_function_dictionary():
            try:
                residual = weak_form_residual(trajectory, cs, phi, T)
            except SupportMarginError as e:
                logger.warning(f"skipping {phi.describe()}: {e}")
                continue
            rows.append({"phi": phi.describe(), "residual": residual})
        return rows

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        T = config.settings["T"]
        start = time.perf_counter()
        trajectory = _solve(config, cs, mu0)
        elapsed = time.perf_counter() - start

        result.tables.append(_trajectory_table(trajectory))
        for i, density in enumerate(trajectory):
            result.tables.append(density_table(f"density_{i:02d}", density))
        result.documents["trajectory.json"] = {"checkpoints": trajectory.manifest()}

        residuals = self._residuals(trajectory, cs, T)
        max_residual = max((abs(r["residual"]) for r in residuals), default=0.0)
        error, leak = _conservation(trajectory)
        result.summary.update({"seconds": elapsed, "conservation_error": error, "leaked_mass": leak,
                               "max_weak_residual": max_residual})

        if self.entry.name == "cpoisson" and mu0.kind == "gaussian":
            p = config.params
            v0 = trajectory.densities[0]
            exact = poisson_series_density(v0, p["lam"], T, p["gamma"] * p["h"])
            final = trajectory.at(T)
            result.summary["oracle_l1"] = float(final.grid.dx * np.abs(final.v - exact).sum())

        if config.settings["refine"]:
            fine = _solve(config, cs, mu0, refine=2)
            fine_rows = self._residuals(fine, cs, T)
            fine_max = max((abs(r["residual"]) for r in fine_rows), default=0.0)
            for row, fine_row in zip(residuals, fine_rows):
                row["residual_refined"] = fine_row["residual"]
            ratio = fine_max / max_residual if max_residual > 0 else 0.0
            result.summary.update({"max_weak_residual_refined": fine_max, "halving_ratio": ratio})
            tol = config.checks.get("weak_halving_tol")
            if tol is not None:
                result.checks.append(CheckResult("weak_halving_tol", abs(ratio - 0.5) <= 0.5 * tol, ratio, tol))
        result.tables.append(records_table("weak_residual", residuals))

        checks = config.checks
        result.check_at_most(checks, "conservation_tol", error)
        result.check_at_most(checks, "max_leak", leak)
        result.check_at_most(checks, "max_weak_residual", max_residual)
        result.check_at_most(checks, "max_seconds", elapsed)
        return result


# ==================== superpose ====================

class SuperposeExperiment(ExperimentStrategy):
    kind = "superpose"

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        start = time.perf_counter()
        trajectory = _solve(config, cs, mu0)
        ensemble = _simulate(config, cs, mu0)
        elapsed = time.perf_counter() - start

        rows = []
        for t in config.checkpoints:
            law = marginal(ensemble, t)
            density = trajectory.at(t)
            rows.append({"t": t, "w1": w1_against_density(law, density), "mc_mean": float(law.mean()),
                         "fpe_mean": density.mean() / density.mass, "mc_var": float(law.var()),
                         "fpe_var": density.variance(), "mass": density.mass,
                         "leaked_mass": density.leaked_mass})
        result.tables.append(TableData(name="superpose", columns=list(rows[0].keys()), rows=rows))
        result.tables.append(_trajectory_table(trajectory))

        error, leak = _conservation(trajectory)
        max_w1 = max(r["w1"] for r in rows)
        result.summary.update(_aborted_summary(ensemble))
        result.summary.update({"seconds": elapsed, "max_w1": max_w1, "conservation_error": error,
                               "leaked_mass": leak})

        checks = config.checks
        result.check_at_most(checks, "max_w1", max_w1)
        result.check_at_most(checks, "conservation_tol", error)
        result.check_at_most(checks, "max_leak", leak)
        result.check_at_most(checks, "max_aborted", ensemble.n_aborted)
        result.check_at_most(checks, "max_seconds", elapsed)
        return result


# ==================== defect ====================

class DefectExperiment(ExperimentStrategy):
    kind = "defect"

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        s, t = config.settings["s"], config.settings["t"]
        offset = config.settings["drift_offset"]
        checks = config.checks
        n_sigma = checks.get("n_sigma") if checks.get("n_sigma") is not None else 3.0
        slack = checks.get("slack") if checks.get("slack") is not None else 0.0

        ensemble = _simulate(config, cs, mu0)
        chis = path_functional_dictionary(s)
        control = cs.replace(drift=_offset_drift(cs, offset), name=f"{cs.name}|drift+{offset:g}") if offset else None

        rows = []
        for phi in test_function_dictionary():
            reports = martingale_defects(ensemble, cs, phi, chis, s, t)
            controls = martingale_defects(ensemble, control, phi, chis, s, t) if control else [None] * len(chis)
            for report, ctrl in zip(reports, controls):
                row = {"phi": report.phi, "chi": report.chi, "estimate": report.estimate,
                       "stderr": report.stderr, "within": int(report.within(n_sigma, slack))}
                if ctrl is not None:
                    row.update({"control_estimate": ctrl.estimate, "control_stderr": ctrl.stderr,
                                "control_detected": int(abs(ctrl.estimate) > n_sigma * ctrl.stderr)})
                rows.append(row)
        result.tables.append(TableData(name="defects", columns=list(rows[0].keys()), rows=rows))

        n_within = sum(r["within"] for r in rows)
        result.summary.update(_aborted_summary(ensemble))
        result.summary.update({"pairs": len(rows), "within": n_within, "n_sigma": n_sigma, "slack": slack,
                               "max_abs_estimate": max(abs(r["estimate"]) for r in rows)})
        if checks.get("n_sigma") is not None or checks.get("slack") is not None:
            result.checks.append(CheckResult("defect_within", n_within == len(rows), n_within, len(rows)))
        if control is not None:
            detected = sum(r["control_detected"] for r in rows) / len(rows)
            result.summary["control_detected_fraction"] = detected
            result.check_at_least(checks, "min_negative_detection", detected)
        result.check_at_most(checks, "max_aborted", ensemble.n_aborted)
        return result


# ==================== limit ====================

def _sequence_noise(kind: str, sigma: float, gamma: float, n: int) -> Tuple[float, float]:
    """序列第 n 项的 (σ^n, γ^n)，常系数扩散情形"""
    if kind == "kill-both":
        return 1.0 / n, gamma / n
    if kind == "kill-jumps":
        return sigma, gamma / n
    if kind == "kill-diffusion":
        return sigma / n, gamma_seq(gamma, n)
    return sigma, gamma_seq(gamma, n)


class LimitExperiment(ExperimentStrategy):
    kind = "limit"

    def _assumptions(self, kind: str) -> List[str]:
        notes = list(self.entry.assumptions)
        if kind in ("kill-jumps", "kill-diffusion"):
            notes.append("BV/Sobolev regularity of b and σ: smooth coefficients chosen, not machine-checked")
        if kind == "kill-diffusion":
            notes.append("∫|u|²(1+|u|)^p ν(du) < ∞: automatic for atomic ν, exponent p not exposed")
        return notes

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        s = config.settings
        seq = config.sequence
        spec = SequenceSpec(kind=seq["kind"], n_values=seq["n_values"], base=cs, n_nodes=seq["n_nodes"])
        table = limit_experiment(spec, s["T"], s["n_steps"], s["N"], config.checkpoints, config.seed,
                                 mu0=mu0, workers=s["workers"], assumptions=self._assumptions(spec.kind))
        result.tables.append(records_table("convergence", table.to_records()))
        result.documents["convergence.json"] = table.manifest()
        result.summary.update({"n_values": table.n_values, "checkpoints": table.checkpoints,
                               "assumptions": table.metadata["assumptions"]})

        checks = config.checks
        if checks.get("noise_factor") is not None:
            factor = checks["noise_factor"]
            result.checks.append(CheckResult("noise_factor", table.within_noise(factor), "largest n", factor))
        if checks.get("monotone_factor") is not None:
            factor = checks["monotone_factor"]
            result.checks.append(CheckResult("monotone_factor", table.monotone_up_to_noise(factor), "w1 vs n", factor))

        if spec.kind == "mollify" and cs.dim == 1:
            window = tuple(s["t_window"] or (0.0, s["T"]))
            series = discrepancy_series(spec, tuple(s["box"]), window, s["n_quad"])
            result.tables.append(records_table("discrepancy", [{"n": n, "l1loc": d} for n, d in series]))
            monotone = is_non_increasing([d for _, d in series])
            result.summary["l1loc_monotone"] = monotone
            if checks.get("l1_monotone"):
                result.checks.append(CheckResult("l1_monotone", monotone, monotone, True))

        if checks.get("max_variance_factor") is not None:
            result.checks.extend(self._variance_checks(config, spec.kind, mu0, table))
        return result

    def _variance_checks(self, config, kind, mu0, table) -> List[CheckResult]:
        p = config.params
        factor = config.checks["max_variance_factor"]
        N = config.settings["N"]
        out = []
        for row in table.rows:
            sigma_n, gamma_n = _sequence_noise(kind, p["sigma"], p["gamma"], row.n)
            oracle = ou_jump_variance(_variance0(mu0), p["theta"], sigma_n, gamma_n**2 * p["lam"] * p["h"]**2, row.t)
            se = row.var * np.sqrt(2.0 / (N - 1))
            out.append(CheckResult(f"variance(n={row.n},t={row.t:g})", row.var <= factor * oracle + 3.0 * se,
                                   row.var, factor * oracle + 3.0 * se))
        return out


# ==================== moment-bound ====================

class MomentBoundExperiment(ExperimentStrategy):
    kind = "moment-bound"

    def run(self, config, cs, mu0):
        result = ExperimentResult(kind=self.kind)
        ensemble = _simulate(config, cs, mu0)
        report = moment_bound_check(ensemble, mu0.first_moment(), cs.C1, cs.C2, cs.nu.total_mass,
                                    gamma=cs.jump_scale)
        result.documents["bound.json"] = report.to_dict()
        result.tables.append(records_table("bound", [report.to_dict()]))
        result.summary.update(_aborted_summary(ensemble))
        result.summary["bound"] = report.to_dict()
        result.checks.append(CheckResult("moment_bound", report.passed, report.empirical, report.bound))
        result.check_at_least(config.checks, "min_slack", report.slack)
        result.check_at_most(config.checks, "max_aborted", ensemble.n_aborted)
        return result


class ExperimentRunner:
    """实验执行器工厂类"""

    STRATEGIES = {
        "simulate": SimulateExperiment,
        "solve-fpe": SolveFpeExperiment,
        "superpose": SuperposeExperiment,
        "defect": DefectExperiment,
        "limit": LimitExperiment,
        "moment-bound": MomentBoundExperiment,
    }

    def __init__(self, config: ExperimentConfig):
        strategy_class = self.STRATEGIES.get(config.experiment)
        if strategy_class is None:
            raise UnknownKindError(f"unknown experiment '{config.experiment}'; "
                                   f"available: {self.get_available_strategies()}")
        self.config = config
        self.entry = default_catalog().get(config.problem)
        self.strategy = strategy_class(self.entry)

    def run(self) -> Tuple[ExperimentResult, Dict[str, object]]:
        cs, mu0 = self.entry.build(self.config.params)
        validation = validate_coefficients(cs, n_probe=VALIDATION_PROBES, seed=self.config.seed)
        logger.info(f"Running {self.config.experiment} on '{cs.name}' (seed {self.config.seed})")
        result = self.strategy.run(self.config, cs, mu0)
        context = {"coefficients": cs.describe(), "initial_law": mu0.describe(),
                   "validation": validation.to_dict(), "assumptions": list(self.entry.assumptions)}
        return result, context

    @classmethod
    def register_strategy(cls, name: str, strategy_class: type):
        cls.STRATEGIES[name] = strategy_class

    @classmethod
    def get_available_strategies(cls) -> List[str]:
        return list(cls.STRATEGIES.keys())


def run(config: ExperimentConfig, out_dir: str) -> int:
    """
    执行实验并写出 summary.json、各 CSV 表与 repro.json。

    全部检查通过返回 EXIT_PASS，否则 EXIT_CHECK_FAILURE。
    运行中的异常会先写出带 "partial": true 的摘要再向上抛出。
    """
    writer = ReportWriter(out_dir)
    writer.write_json("repro.json", config.to_dict())
    base = {"experiment": config.experiment, "problem": config.problem, "seed": config.seed,
            "config": config.to_dict()}
    try:
        result, context = ExperimentRunner(config).run()
        for table in result.tables:
            writer.write_table(table)
        for filename, document in result.documents.items():
            writer.write_json(filename, document)
        for filename, arrays in result.arrays.items():
            writer.write_npz(filename, **arrays)
    except Exception as e:
        writer.write_json("summary.json", {**base, "partial": True, "error": str(e),
                                           "error_type": type(e).__name__, "files": list(writer.written)})
        raise

    summary = {**base, **context, "partial": False, "results": result.summary,
               "checks": [c.to_dict() for c in result.checks], "passed": result.passed,
               "files": list(writer.written) + ["summary.json"]}
    writer.write_json("summary.json", summary)
    for check in result.checks:
        log = logger.info if check.passed else logger.warning
        log(f"check {check.name}: {'PASS' if check.passed else 'FAIL'} "
            f"(observed {check.observed}, threshold {check.threshold})")
    return EXIT_PASS if result.passed else EXIT_CHECK_FAILURE
