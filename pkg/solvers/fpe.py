"""
JumpFPE - Fokker-Planck Solver Module

一维非局部 Fokker–Planck 方程

    ∂_t v = -∂_x(b v) + ∂_xx(a v) + Σ_k w_k [v(x - γu_k) - v(x)]

在截断区域上的显式有限体积求解：
- 漂移：一阶迎风通量
- 扩散：(a v) 的中心二阶差分（写成面通量形式）
- 跳跃：离网格点处的线性插值
- 边界：吸收边界，流出的质量记入 leaked_mass
以及生成元 (A_t + B_t)φ 的逐点求值和弱形式残差。
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from core.coefficients import CoefficientSet
from core.errors import CFLViolation, SupportMarginError
from core.grid import DensityTrajectory, Grid1D, GridDensity1D, MASS_TOL
from core.laws import InitialLaw
from core.test_functions import TestFunction

logger = logging.getLogger(__name__)

DEFAULT_SAFETY = 0.95
# 未给定 dt 时的步长上限（时间精度）；CFL 上限只保证稳定
DEFAULT_MAX_DT = 1e-3
DEFAULT_QUAD_WINDOWS = 256
ROUNDING_TOL = 1e-12


# ==================== 生成元 ====================

def apply_generator(cs: CoefficientSet, t, phi: TestFunction, x) -> np.ndarray:
    """(A_t + B_t)φ(x) = b φ' + a φ'' + Σ_k w_k [φ(x + γ g(t,x,u_k)) - φ(x)]，a = σ²/2"""
    x = np.asarray(x, dtype=float)
    t_eval = np.broadcast_to(np.asarray(t, dtype=float), x.shape) if np.ndim(t) else float(t)
    out = cs.drift_1d(t_eval, x) * phi.d1(x) + cs.a_1d(t_eval, x) * phi.d2(x)
    if cs.nu.n_atoms:
        targets = cs.jump_targets_1d(t_eval, x)
        out = out + np.sum((phi.value(targets) - phi.value(x)[..., None]) * cs.nu.weights, axis=-1)
    return out


# ==================== 显式步进 ====================

def _shifts(cs: CoefficientSet) -> np.ndarray:
    if cs.nu.n_atoms == 0 or cs.jump_scale == 0:
        return np.zeros(0)
    return cs.additive_shifts()


def _outflow_rates(cs: CoefficientSet, grid: Grid1D, t: float):
    """每个单元的流出率；显式格式保持非负当且仅当 Δt·max(rate) <= 1"""
    b_face = cs.drift_1d(t, grid.edges)
    a_cell = cs.a_1d(t, grid.centers)
    if np.any(a_cell < -ROUNDING_TOL):
        raise ValueError(f"diffusion coefficient a is negative at t={t}")
    a_cell = np.maximum(a_cell, 0.0)
    rate = (np.maximum(b_face[1:], 0.0) + np.maximum(-b_face[:-1], 0.0)) / grid.dx
    rate = rate + 2.0 * a_cell / grid.dx**2 + cs.nu.total_mass
    return rate, b_face, a_cell


def max_stable_dt(cs: CoefficientSet, grid: Grid1D, t: float = 0.0) -> float:
    """CFL 允许的最大时间步长"""
    rate, _, _ = _outflow_rates(cs, grid, t)
    peak = float(rate.max())
    return np.inf if peak == 0 else 1.0 / peak


def _shift_cells(v: np.ndarray, k: int) -> np.ndarray:
    """out[i] = v[i - k]，越界处为 0"""
    n = v.shape[0]
    out = np.zeros_like(v)
    if abs(k) >= n:
        return out
    if k >= 0:
        out[k:] = v[:n - k]
    else:
        out[:n + k] = v[-k:]
    return out


def fpe_step(state: GridDensity1D, cs: CoefficientSet, dt: float) -> GridDensity1D:
    """一个显式 Euler 守恒步；超出 CFL 时拒绝并给出所需 Δt"""
    grid = state.grid
    dx = grid.dx
    rate, b_face, a_cell = _outflow_rates(cs, grid, state.t)
    peak = float(rate.max())
    if dt * peak > 1.0 + ROUNDING_TOL:
        raise CFLViolation(dt, 1.0 / peak)
    shifts = _shifts(cs)

    v = state.v
    zero = np.zeros(1)
    v_left = np.concatenate((zero, v))
    v_right = np.concatenate((v, zero))
    av = a_cell * v
    flux = (np.maximum(b_face, 0.0) * v_left + np.minimum(b_face, 0.0) * v_right
            - (np.concatenate((av, zero)) - np.concatenate((zero, av))) / dx)
    dv = -(flux[1:] - flux[:-1]) / dx
    leak = dt * (flux[-1] - flux[0])

    for shift, weight in zip(shifts, cs.nu.weights):
        q = int(np.floor(shift / dx))
        theta = shift / dx - q
        inflow = (1.0 - theta) * _shift_cells(v, q) + theta * _shift_cells(v, q + 1)
        dv = dv + weight * (inflow - v)
        leak += dt * weight * dx * (v.sum() - inflow.sum())

    v_new = v + dt * dv
    floor = -ROUNDING_TOL * max(float(v.max()), 1.0)
    if np.any(v_new < floor):
        raise ValueError(f"negative density {v_new.min():.3g} at t={state.t}; dt={dt} breaks positivity")
    v_new = np.maximum(v_new, 0.0)
    return GridDensity1D(grid=grid, v=v_new, leaked_mass=state.leaked_mass + max(leak, 0.0),
                         t=state.t + dt)


# ==================== 求解 ====================

def initial_density(law: InitialLaw, grid: Grid1D) -> GridDensity1D:
    """μ0 在网格上的单元平均，归一化到单位质量"""
    v = law.cell_averages(grid)
    mass = grid.dx * v.sum()
    if not mass > 0:
        raise ValueError("initial law puts no mass on the grid")
    return GridDensity1D(grid=grid, v=v / mass, leaked_mass=0.0, t=0.0)


def solve_fpe(cs: CoefficientSet, v0: GridDensity1D, T: float, dt: Optional[float] = None,
              checkpoints: Optional[Sequence[float]] = None,
              safety: float = DEFAULT_SAFETY, max_dt: float = DEFAULT_MAX_DT,
              quad_windows: int = DEFAULT_QUAD_WINDOWS) -> DensityTrajectory:
    """
    从 v0 推进到 T，返回各检查点（含 t=0）上的密度。

    dt 为 None 时每一步取 min(safety × CFL 上限, max_dt)；给定 dt 时最后一步会截短以精确落在检查点上。
    推进过程中把 Σ Δt_k v_k 按约 quad_windows 个时间窗口累积（窗口在第一个越过边界的步末关闭，
    检查点处强制关闭），供 weak_form_residual 做时间积分。
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    if abs(v0.mass + v0.leaked_mass - 1.0) > MASS_TOL:
        raise ValueError(f"v0 must carry unit mass, got {v0.mass + v0.leaked_mass:.12g}")
    if dt is not None and not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not max_dt > 0:
        raise ValueError(f"max_dt must be positive, got {max_dt}")
    if quad_windows < 1:
        raise ValueError(f"quad_windows must be >= 1, got {quad_windows}")
    marks = sorted({float(c) for c in (checkpoints if checkpoints is not None else [T])} | {float(T)})
    if marks and (marks[0] < 0 or marks[-1] > T):
        raise ValueError(f"checkpoints must lie in [0, {T}]")

    trajectory = DensityTrajectory()
    trajectory.append(v0)
    state = v0
    n_steps = 0
    boundaries = np.linspace(0.0, T, quad_windows + 1)[1:] if T > 0 else np.zeros(0)
    next_boundary = 0
    pending = np.zeros_like(v0.v)
    window_start = 0.0

    def close_window(t_end: float):
        nonlocal pending, window_start
        if t_end > window_start:
            trajectory.add_window(window_start, t_end, pending)
            pending = np.zeros_like(v0.v)
        window_start = t_end

    for mark in marks:
        if mark == 0.0:
            continue
        while mark - state.t > 1e-14 * max(1.0, mark):
            if dt is not None:
                step = dt
            else:
                step = min(safety * max_stable_dt(cs, state.grid, state.t), max_dt)
            step = min(step, mark - state.t)
            pending = pending + step * state.v
            state = fpe_step(state, cs, step)
            if mark - state.t <= 1e-14 * max(1.0, mark):
                state = GridDensity1D(grid=state.grid, v=state.v, leaked_mass=state.leaked_mass, t=mark)
            n_steps += 1
            while next_boundary < boundaries.size and state.t >= boundaries[next_boundary] - ROUNDING_TOL:
                close_window(state.t)
                next_boundary += 1
        state = GridDensity1D(grid=state.grid, v=state.v, leaked_mass=state.leaked_mass, t=mark)
        close_window(mark)
        trajectory.append(state)
        logger.debug(f"checkpoint t={mark:.6g}: mass={state.mass:.12f} leak={state.leaked_mass:.3e}")

    logger.info(f"Solved FPE for '{cs.name}' to T={T} in {n_steps} steps "
                f"(final leak {state.leaked_mass:.3e}, {len(trajectory.windows)} quadrature windows)")
    return trajectory


# ==================== 弱形式 ====================

def weak_form_residual(trajectory: DensityTrajectory, cs: CoefficientSet, phi: TestFunction,
                       t: float) -> float:
    """
    μ_t(φ) - μ_0(φ) - ∫_0^t μ_s((A_s + B_s)φ) ds

    求解器记录了时间窗口时，时间积分用窗口内逐步累积的密度（与显式格式的左端点求和一致，
    生成元取在窗口中点，系数不依赖时间时没有时间离散误差）；否则退回检查点上的梯形公式。
    空间积分用单元求和。φ 的支撑必须离边界至少 max|γu_k|，否则边界流失会污染恒等式。
    """
    grid = trajectory.densities[0].grid
    shifts = _shifts(cs)
    margin = float(np.abs(shifts).max()) if shifts.size else 0.0
    lo, hi = phi.support
    if lo < grid.x_min + margin or hi > grid.x_max - margin:
        raise SupportMarginError(
            f"support [{lo:g}, {hi:g}] of {phi.describe()} is within {margin:g} of the domain "
            f"[{grid.x_min:g}, {grid.x_max:g}]"
        )
    target = trajectory.at(t)

    centers = grid.centers
    phi_values = phi.value(centers)
    mu_0 = grid.dx * np.dot(trajectory.densities[0].v, phi_values)
    mu_t = grid.dx * np.dot(target.v, phi_values)
    if trajectory.windows:
        integral = 0.0
        for window in trajectory.windows:
            if window.t_hi > target.t + ROUNDING_TOL:
                break
            generator = apply_generator(cs, window.midpoint, phi, centers)
            integral += grid.dx * float(np.dot(window.integrated, generator))
        return float(mu_t - mu_0 - integral)

    times, pairings = [], []
    for density in trajectory:
        if density.t > t + 1e-12:
            break
        times.append(density.t)
        pairings.append(grid.dx * np.dot(density.v, apply_generator(cs, density.t, phi, centers)))
    integral = float(trapezoid(pairings, times)) if len(times) > 1 else 0.0
    return float(mu_t - mu_0 - integral)


def first_moment(density: GridDensity1D) -> float:
    """∫|x| v(t,x) dx（L+ 成员检查）；∫x v 见 GridDensity1D.mean"""
    return float(density.grid.dx * np.dot(np.abs(density.grid.centers), density.v))
