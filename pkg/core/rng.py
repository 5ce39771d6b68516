"""JumpFPE - Core Random Module

基于计数器的随机数子流。

每条路径 i 使用同一个 Philox 密钥（由 master_seed 派生）和不同的计数器高位字，
所以路径 i 的随机数只取决于 (master_seed, i)，与线程数和调度顺序无关。
高斯随机数统一由 Generator.standard_normal（numpy 的 ziggurat 方法）生成。
"""

from typing import Tuple, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, None]

UINT64_MAX = 2**64 - 1


def philox_key(master_seed: int) -> np.ndarray:
    """由 64 位主种子派生 Philox 的 128 位密钥"""
    if not 0 <= int(master_seed) <= UINT64_MAX:
        raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {master_seed}")
    return np.random.SeedSequence(int(master_seed)).generate_state(2, dtype=np.uint64)


def substream(master_seed: int, index: int, key: np.ndarray = None) -> np.random.Generator:
    """返回第 index 条子流的生成器"""
    if key is None:
        key = philox_key(master_seed)
    counter = np.array([0, 0, 0, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def derive_seed(master_seed: int, *labels: int) -> int:
    """由主种子和整数标签派生一个新的 64 位种子（用于实验内部的独立集合）"""
    entropy: Tuple[int, ...] = (int(master_seed),) + tuple(int(label) for label in labels)
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def as_generator(seed: SeedLike) -> np.random.Generator:
    """把整数种子或已有生成器统一成 Generator"""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng()
    return substream(int(seed), 0)
