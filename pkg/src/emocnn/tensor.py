"""Dense tensors and deterministic random number generation.

All numeric values live in plain numpy arrays with row-major (C order)
layout. float32 is the training precision; gradient checks run in float64.
"""
from __future__ import annotations

import math

import numpy as np

DEFAULT_DTYPE = np.float32
GRAD_CHECK_DTYPE = np.float64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


class Prng:
    """splitmix64 run in counter mode.

    Draw number i of a stream with seed s is splitmix64(s + (i+1)*GOLDEN),
    i.e. a pure integer function of (seed, draw index). Identical seeds give
    identical streams on every platform, blocks of any size can be produced
    vectorized, and the algorithm is frozen: changing it invalidates every
    recorded run.
    """

    algorithm = "splitmix64-counter"

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & _U64_MASK)
        self._drawn = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit draws as a uint64 array."""
        if n < 0:
            raise ValueError(f"draw count must be non-negative, got {n}")
        idx = np.arange(self._drawn + 1, self._drawn + n + 1, dtype=np.uint64)
        self._drawn += n
        with np.errstate(over="ignore"):
            return _splitmix64(self._seed + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float64 samples in [0, 1), using the top 53 bits per draw."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normal float64 samples via the Box-Muller transform."""
        half = (n + 1) // 2
        u1 = self.uniform(half)
        u2 = self.uniform(half)
        # 1 - u1 is in (0, 1], so the log is finite.
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = (2.0 * math.pi) * u2
        return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n). Modulo bias is accepted."""
        idx = np.arange(n, dtype=np.int64)
        if n < 2:
            return idx
        draws = self.raw(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] % np.uint64(i + 1))
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def mask(self, shape, keep_probability: float) -> np.ndarray:
        """Boolean array, element True with probability ``keep_probability``."""
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        return (self.uniform(size) < keep_probability).reshape(shape)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-major matrix product of a [M,K] and b [K,N]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def reshape(t: np.ndarray, new_shape) -> np.ndarray:
    """Reinterpret the flat row-major data of ``t`` under a new shape."""
    t = np.asarray(t)
    new_shape = tuple(int(d) for d in new_shape)
    count = int(np.prod(new_shape, dtype=np.int64)) if new_shape else 1
    if count != t.size:
        raise ValueError(
            f"cannot reshape {t.shape} ({t.size} elements) into {new_shape} ({count} elements)"
        )
    return t.reshape(new_shape)


def gaussian_init(shape, mean: float, std: float, rng: Prng, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """I.i.d. normal tensor, deterministic under the generator's seed."""
    if std < 0:
        raise ValueError(f"std must be non-negative, got {std}")
    shape = tuple(int(d) for d in shape)
    size = int(np.prod(shape, dtype=np.int64)) if shape else 1
    if std == 0:
        values = np.full(size, float(mean))
    else:
        values = rng.normal(size) * std + mean
    return values.reshape(shape).astype(dtype)
