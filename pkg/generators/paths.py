"""
JumpFPE - Path Generation Module

这个模块提供了跳扩散方程样本路径的生成：
- 标记泊松过程的跳跃采样（有限强度 ν）
- 跳跃自适应 Euler 格式：均匀网格与跳跃时刻合并，跳跃时刻处精确施加跳跃
- 基于计数器子流的可复现路径集合，结果与线程数无关
- 路径集合在任意时刻的边缘分布（càdlàg 约定）
"""

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from core.coefficients import CoefficientSet
from core.errors import PathOverflowError
from core.laws import EmpiricalLaw, InitialLaw
from core.measures import JumpList, MarkMeasure
from core.rng import SeedLike, as_generator, philox_key, substream

logger = logging.getLogger(__name__)

# 固定的分块大小：分块与线程数无关，保证不同线程数下逐位一致
CHUNK_SIZE = 4096

InitialSampler = Callable[[np.random.Generator], np.ndarray]


# ==================== 跳跃采样 ====================

def sample_jumps(nu: MarkMeasure, T: float, seed: SeedLike = None) -> JumpList:
    """
    在 [0, T] 上采样强度为 dt·ν(du) 的泊松随机测度。

    跳跃个数 ~ Poisson(T·ν(U))；给定个数时跳跃时刻在 (0, T] 上独立均匀；
    原子下标以概率 w_k/ν(U) 独立抽取。时刻相同（概率零事件）时重新抽取。
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    rng = as_generator(seed)
    cdf = np.cumsum(nu.probabilities) if nu.n_atoms else np.zeros(0)
    times, atoms = _draw_jump_arrays(nu, T, rng, cdf)
    order = np.argsort(times, kind="stable")
    times, atoms = times[order], atoms[order]
    ties = np.diff(times) == 0
    while np.any(ties):
        times[1:][ties] = T * (1.0 - rng.random(int(ties.sum())))
        order = np.argsort(times, kind="stable")
        times, atoms = times[order], atoms[order]
        ties = np.diff(times) == 0
    return JumpList(times=times, atom_indices=atoms, horizon=T)


# ==================== 路径数据结构 ====================

@dataclass
class PathSample:
    """一条 càdlàg 样本路径：values 为右极限，pre_values 为左极限"""

    times: np.ndarray        # (L,)
    values: np.ndarray       # (L, d)
    pre_values: np.ndarray   # (L, d)，非跳跃时刻与 values 相同
    jump_mask: np.ndarray    # (L,) bool
    aborted: Optional[str] = None

    @property
    def jump_times(self) -> np.ndarray:
        return self.times[self.jump_mask]

    @property
    def pre_jump_values(self) -> np.ndarray:
        return self.pre_values[self.jump_mask]

    @property
    def n_jumps(self) -> int:
        return int(self.jump_mask.sum())

    def value_at(self, t: float) -> np.ndarray:
        """最后一个 <= t 的节点上的右极限值"""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i < 0:
            raise ValueError(f"t={t} precedes the path start")
        return self.values[i]


@dataclass
class PathEnsemble:
    """N 条独立路径；数组以 +inf 时刻填充到相同长度"""

    times: np.ndarray        # (N, L)
    values: np.ndarray       # (N, L, d)
    pre_values: np.ndarray   # (N, L, d)
    jump_mask: np.ndarray    # (N, L)
    lengths: np.ndarray      # (N,)
    horizon: float
    n_steps: int
    master_seed: int
    fingerprint: str
    aborted: Dict[int, str] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return int(self.times.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[2])

    @property
    def n_aborted(self) -> int:
        return len(self.aborted)

    @property
    def alive(self) -> np.ndarray:
        mask = np.ones(self.n_paths, dtype=bool)
        if self.aborted:
            mask[list(self.aborted)] = False
        return mask

    @property
    def initial_values(self) -> np.ndarray:
        return self.values[:, 0, :]

    @property
    def jump_counts(self) -> np.ndarray:
        return self.jump_mask.sum(axis=1)

    def path(self, i: int) -> PathSample:
        n = int(self.lengths[i])
        return PathSample(
            times=self.times[i, :n].copy(),
            values=self.values[i, :n].copy(),
            pre_values=self.pre_values[i, :n].copy(),
            jump_mask=self.jump_mask[i, :n].copy(),
            aborted=self.aborted.get(i),
        )

    @property
    def paths(self) -> List[PathSample]:
        return [self.path(i) for i in range(self.n_paths)]

    def last_index(self, t: float) -> np.ndarray:
        """每条路径上最后一个 <= t 的节点下标"""
        return (self.times <= t).sum(axis=1) - 1

    def sup_norm(self) -> np.ndarray:
        """每条路径的 sup_{t<=T} |X_t|（左右极限都计入）"""
        valid = np.isfinite(self.times)
        right = np.linalg.norm(self.values, axis=2)
        left = np.linalg.norm(self.pre_values, axis=2)
        return np.where(valid, np.maximum(right, left), 0.0).max(axis=1)


# ==================== Euler 格式 ====================

def _draw_jump_arrays(nu: MarkMeasure, T: float, rng: np.random.Generator,
                      cdf: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """未排序的跳跃时刻与原子下标；消耗顺序：个数、时刻、原子"""
    if nu.total_mass == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    count = int(rng.poisson(T * nu.total_mass))
    times = T * (1.0 - rng.random(count))
    atoms = np.minimum(np.searchsorted(cdf, rng.random(count), side="right"), nu.n_atoms - 1)
    return times, atoms


@dataclass
class _ChunkDraws:
    """一个分块内各路径的随机数，按路径顺序拼接"""

    x0: np.ndarray            # (n, d)
    jump_counts: np.ndarray   # (n,)
    jump_times: np.ndarray    # (Σ counts,)，每条路径内未排序
    jump_atoms: np.ndarray    # (Σ counts,)
    normals: np.ndarray       # (Σ (n_steps + counts), m)


def _draw_chunk(cs: CoefficientSet, sampler: InitialSampler, streams: Iterable[np.random.Generator],
                T: float, n_steps: int) -> _ChunkDraws:
    """
    每条路径只从自己的子流取数，顺序固定为：初始状态、跳跃、高斯增量。
    这里只做抽样；网格合并与 Euler 推进在整个分块上向量化完成。
    """
    cdf = np.cumsum(cs.nu.probabilities) if cs.nu.n_atoms else np.zeros(0)
    x0, counts, times, atoms, normals = [], [], [], [], []
    for rng in streams:
        x0.append(np.asarray(sampler(rng), dtype=float).reshape(cs.dim))
        t, a = _draw_jump_arrays(cs.nu, T, rng, cdf)
        counts.append(t.size)
        times.append(t)
        atoms.append(a)
        normals.append(rng.standard_normal((n_steps + t.size, cs.noise_dim)))
    return _ChunkDraws(x0=np.stack(x0), jump_counts=np.array(counts, dtype=np.int64),
                       jump_times=np.concatenate(times), jump_atoms=np.concatenate(atoms).astype(np.int64),
                       normals=np.concatenate(normals))


def _layout(draws: _ChunkDraws, grid: np.ndarray):
    """
    把均匀网格与每条路径的跳跃时刻合并成 (n, width) 的节点数组。

    路径 i 有 len(grid) + counts[i] 个节点；跳跃时刻恰好落在网格点上时两个节点同时刻，
    中间的 Euler 步长为零。行尾用 T 填充。
    """
    n = draws.x0.shape[0]
    counts = draws.jump_counts
    lengths = grid.size + counts
    width = int(lengths.max())
    column = np.arange(width)[None, :]
    times = np.full((n, width), grid[-1])
    atoms = np.full((n, width), -1, dtype=np.int64)

    if counts.sum():
        owner = np.repeat(np.arange(n), counts)
        order = np.lexsort((draws.jump_times, owner))
        jump_times = draws.jump_times[order]
        starts = np.cumsum(counts) - counts
        rank = np.arange(owner.size) - starts[owner]
        slots = np.searchsorted(grid, jump_times, side="right") + rank
        times[owner, slots] = jump_times
        atoms[owner, slots] = draws.jump_atoms[order]

    grid_slots = (column < lengths[:, None]) & (atoms < 0)
    times[grid_slots] = np.tile(grid, n)
    normals = np.zeros((n, width - 1, draws.normals.shape[1]))
    normals[column[:, :-1] < (lengths - 1)[:, None]] = draws.normals
    return times, atoms, normals, lengths


@dataclass
class _ChunkResult:
    times: np.ndarray
    values: np.ndarray
    pre_values: np.ndarray
    jump_mask: np.ndarray
    lengths: np.ndarray
    aborted: Dict[int, str]


def _evolve(cs: CoefficientSet, draws: _ChunkDraws, grid: np.ndarray) -> _ChunkResult:
    """对一个分块的所有路径逐列推进 Euler 格式"""
    times, atoms, normals, lengths = _layout(draws, grid)
    n, width = times.shape
    d = cs.dim

    x = draws.x0.copy()
    values = np.empty((n, width, d))
    pre_values = np.empty((n, width, d))
    values[:, 0] = x
    pre_values[:, 0] = x
    alive = np.ones(n, dtype=bool)
    aborted: Dict[int, str] = {}

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, width):
            active = alive & (k < lengths)
            t_prev = times[:, k - 1]
            dt = times[:, k] - t_prev
            drift = cs.b(t_prev, x)
            noise = np.einsum("nij,nj->ni", cs.sigma(t_prev, x), normals[:, k - 1])
            stepped = x + drift * dt[:, None] + noise * np.sqrt(dt)[:, None]
            x = np.where(active[:, None], stepped, x)
            pre_values[:, k] = x

            # 漂移/扩散先更新，再施加同一时刻的跳跃
            jumping = active & (atoms[:, k] >= 0)
            if np.any(jumping):
                u = cs.nu.marks[atoms[jumping, k]]
                x[jumping] = x[jumping] + cs.jump_scale * cs.g(times[jumping, k], x[jumping], u)
            values[:, k] = x

            bad = active & ~np.all(np.isfinite(x), axis=1)
            if np.any(bad):
                for i in np.flatnonzero(bad):
                    aborted[int(i)] = f"non-finite state at t={times[i, k]:.6g} (step {k})"
                lengths[bad] = k
                alive &= ~bad
                x[bad] = values[bad, k - 1]

    jump_mask = atoms >= 0
    column = np.arange(width)[None, :]
    padding = column >= lengths[:, None]
    times[padding] = np.inf
    jump_mask &= ~padding
    return _ChunkResult(times=times, values=values, pre_values=pre_values, jump_mask=jump_mask,
                        lengths=lengths, aborted=aborted)


def _uniform_grid(T: float, n_steps: int) -> np.ndarray:
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    return np.linspace(0.0, T, n_steps + 1)


def simulate_path(cs: CoefficientSet, x0, T: float, n_steps: int, seed: SeedLike = None) -> PathSample:
    """
    跳跃自适应 Euler 格式模拟单条路径。

    相邻节点之间 X <- X + b·Δt + σ·sqrt(Δt)·Z；跳跃时刻 X <- X⁻ + γ·g(t, X⁻, u)。
    出现非有限值时路径终止，PathSample.aborted 给出诊断信息。
    """
    grid = _uniform_grid(T, n_steps)
    start = np.asarray(x0, dtype=float)
    draws = _draw_chunk(cs, lambda rng: start, [as_generator(seed)], float(grid[-1]), n_steps)
    result = _evolve(cs, draws, grid)
    n = int(result.lengths[0])
    diagnostic = result.aborted.get(0)
    if diagnostic:
        logger.warning(f"Path aborted: {diagnostic}")
    return PathSample(times=result.times[0, :n], values=result.values[0, :n],
                      pre_values=result.pre_values[0, :n], jump_mask=result.jump_mask[0, :n],
                      aborted=diagnostic)


def ensemble_fingerprint(cs: CoefficientSet, mu0: Optional[InitialLaw], T: float, n_steps: int,
                         N: int, master_seed: int) -> str:
    payload = {
        "coefficients": cs.describe(),
        "mu0": mu0.describe() if mu0 is not None else None,
        "T": T,
        "n_steps": n_steps,
        "N": N,
        "master_seed": int(master_seed),
    }
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def simulate_ensemble(cs: CoefficientSet, mu0_sampler, T: float, n_steps: int, N: int,
                      master_seed: int, workers: int = 1) -> PathEnsemble:
    """
    生成 N 条独立路径。

    路径 i 只使用子流 (master_seed, i)：先抽初始状态，再抽跳跃，最后抽高斯增量。
    mu0_sampler 可以是 InitialLaw 或 rng -> state 的可调用对象。
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    grid = _uniform_grid(T, n_steps)
    law = mu0_sampler if isinstance(mu0_sampler, InitialLaw) else None
    sampler: InitialSampler = mu0_sampler.sample if law is not None else mu0_sampler
    key = philox_key(master_seed)

    def run_chunk(bounds: Tuple[int, int]) -> _ChunkResult:
        streams = (substream(master_seed, i, key) for i in range(*bounds))
        return _evolve(cs, _draw_chunk(cs, sampler, streams, float(grid[-1]), n_steps), grid)

    chunks = [(s, min(s + CHUNK_SIZE, N)) for s in range(0, N, CHUNK_SIZE)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, chunks))
    else:
        results = [run_chunk(c) for c in chunks]

    ensemble = _assemble(results, chunks, cs.dim)
    ensemble = PathEnsemble(
        times=ensemble.times, values=ensemble.values, pre_values=ensemble.pre_values,
        jump_mask=ensemble.jump_mask, lengths=ensemble.lengths, horizon=float(T), n_steps=n_steps,
        master_seed=int(master_seed), aborted=ensemble.aborted,
        fingerprint=ensemble_fingerprint(cs, law, T, n_steps, N, master_seed),
    )
    if ensemble.n_aborted:
        logger.warning(f"{ensemble.n_aborted} of {N} paths aborted for '{cs.name}'")
    logger.info(f"Simulated {N} paths of '{cs.name}' on [0, {T}] "
                f"(n_steps={n_steps}, mean jumps={ensemble.jump_counts.mean():.4g})")
    return ensemble


def _assemble(results: List[_ChunkResult], chunks: List[Tuple[int, int]], dim: int) -> _ChunkResult:
    """把各分块填充到同一宽度后拼接"""
    width = max(r.times.shape[1] for r in results)

    def pad(array: np.ndarray, fill_last: bool, fill=None) -> np.ndarray:
        extra = width - array.shape[1]
        if extra == 0:
            return array
        if fill_last:
            tail = np.repeat(array[:, -1:], extra, axis=1)
        else:
            tail = np.full((array.shape[0], extra) + array.shape[2:], fill, dtype=array.dtype)
        return np.concatenate([array, tail], axis=1)

    aborted: Dict[int, str] = {}
    for (start, _), r in zip(chunks, results):
        aborted.update({start + i: msg for i, msg in r.aborted.items()})
    return _ChunkResult(
        times=np.concatenate([pad(r.times, False, np.inf) for r in results]),
        values=np.concatenate([pad(r.values, True) for r in results]),
        pre_values=np.concatenate([pad(r.pre_values, True) for r in results]),
        jump_mask=np.concatenate([pad(r.jump_mask, False, False) for r in results]),
        lengths=np.concatenate([r.lengths for r in results]),
        aborted=aborted,
    )


# ==================== 边缘分布 ====================

def marginal(ensemble: PathEnsemble, t: float) -> EmpiricalLaw:
    """
    时刻 t 的经验边缘分布：取每条路径上最后一个 <= t 的节点的右极限值。
    终止的路径不计入。
    """
    if t < 0 or t > ensemble.horizon + 1e-12:
        raise ValueError(f"t={t} lies outside [0, {ensemble.horizon}]")
    t = min(t, ensemble.horizon)
    index = ensemble.last_index(t)
    rows = np.arange(ensemble.n_paths)
    samples = ensemble.values[rows, index]
    alive = ensemble.alive
    if not np.all(alive):
        logger.warning(f"marginal at t={t} drops {int((~alive).sum())} aborted paths")
        samples = samples[alive]
    return EmpiricalLaw(samples=samples, t=float(t), source=ensemble.fingerprint)


def require_no_aborted(ensemble: PathEnsemble):
    """需要完整集合的调用方使用"""
    if ensemble.n_aborted:
        first = min(ensemble.aborted)
        raise PathOverflowError(f"{ensemble.n_aborted} paths aborted; first: path {first}: "
                                f"{ensemble.aborted[first]}", path_index=first)
