"""Counter-based operator parameter generation.

Every backend must evaluate the same mathematical function, so operator
parameters (conv kernels, batch-norm statistics, PReLU slopes) are pure
functions of (param_seed, edge identity). The generator is a 64-bit mix
function over a packed counter; adapters in other processes reimplement the
same few lines and are held to bit-compatible float32 streams by the frozen
test-vector file under tests/data/.

Counter layout (one 64-bit word per parameter element):

    bits 48..63  edge source vertex
    bits 32..47  edge target vertex
    bits 24..31  parameter slot
    bits  0..23  element index

    word = mix64(param_seed XOR mix64(counter))

mix64 is the SplitMix64 finalizer. A word maps to a float32 in [-1, 1) by
taking its top 24 bits:  u = (word >> 40) * 2^-23 - 1, which is exact in
float32 arithmetic.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1

SLOT_WEIGHT = 0
SLOT_BN_SCALE = 0
SLOT_BN_SHIFT = 1
SLOT_BN_MEAN = 2
SLOT_BN_VAR = 3
SLOT_PRELU = 0

BN_EPSILON = np.float32(1e-5)


def mix64(z: int) -> int:
    """SplitMix64 finalizer (bijective on 64-bit words)."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def pack_counter(edge_from: int, edge_to: int, slot: int, index: int) -> int:
    if not 0 <= edge_from < 1 << 16 or not 0 <= edge_to < 1 << 16:
        raise ValueError("edge endpoints must fit in 16 bits")
    if not 0 <= slot < 1 << 8:
        raise ValueError("slot must fit in 8 bits")
    if not 0 <= index < 1 << 24:
        raise ValueError("element index must fit in 24 bits")
    return (edge_from << 48) | (edge_to << 32) | (slot << 24) | index


def param_word(param_seed: int, edge_from: int, edge_to: int, slot: int, index: int) -> int:
    """One generator word; the scalar reference for the vectorized path."""
    return mix64((param_seed & MASK64) ^ mix64(pack_counter(edge_from, edge_to, slot, index)))


def unit_float(word: int) -> np.float32:
    """Map a generator word to float32 in [-1, 1) exactly."""
    return np.float32((word >> 40) * 2.0**-23 - 1.0)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z + np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def unit_floats(param_seed: int, edge_from: int, edge_to: int, slot: int, count: int) -> np.ndarray:
    """Vectorized stream of float32 unit values for one parameter slot."""
    base = np.uint64(pack_counter(edge_from, edge_to, slot, 0))
    counters = base + np.arange(count, dtype=np.uint64)
    words = _mix64_vec(np.uint64(param_seed & MASK64) ^ _mix64_vec(counters))
    return ((words >> np.uint64(40)).astype(np.float64) * 2.0**-23 - 1.0).astype(np.float32)


@lru_cache(maxsize=4096)
def conv_weights(param_seed: int, edge_from: int, edge_to: int, out_channels: int, in_channels: int, kernel: int) -> np.ndarray:
    """float32 kernel (out, in, k, k), uniform with fan-in variance scaling."""
    fan_in = in_channels * kernel * kernel
    scale = np.float32(np.sqrt(3.0 / fan_in))
    u = unit_floats(param_seed, edge_from, edge_to, SLOT_WEIGHT, out_channels * fan_in)
    w = (u * scale).reshape(out_channels, in_channels, kernel, kernel)
    w.flags.writeable = False
    return w


@lru_cache(maxsize=4096)
def depthwise_weights(param_seed: int, edge_from: int, edge_to: int, channels: int, kernel: int) -> np.ndarray:
    """float32 kernel (channels, k, k), one filter per channel."""
    scale = np.float32(np.sqrt(3.0 / (kernel * kernel)))
    u = unit_floats(param_seed, edge_from, edge_to, SLOT_WEIGHT, channels * kernel * kernel)
    w = (u * scale).reshape(channels, kernel, kernel)
    w.flags.writeable = False
    return w


@lru_cache(maxsize=4096)
def batchnorm_params(param_seed: int, edge_from: int, edge_to: int, channels: int):
    """Per-channel float32 (gamma, beta, running_mean, running_var)."""
    tenth = np.float32(0.1)
    gamma = np.float32(1.0) + tenth * unit_floats(param_seed, edge_from, edge_to, SLOT_BN_SCALE, channels)
    beta = tenth * unit_floats(param_seed, edge_from, edge_to, SLOT_BN_SHIFT, channels)
    mean = tenth * unit_floats(param_seed, edge_from, edge_to, SLOT_BN_MEAN, channels)
    u = unit_floats(param_seed, edge_from, edge_to, SLOT_BN_VAR, channels)
    # Variance stays in [0.5, 1.0) so normalization never divides by ~0.
    var = np.float32(0.5) + np.float32(0.25) * (u + np.float32(1.0))
    for arr in (gamma, beta, mean, var):
        arr.flags.writeable = False
    return gamma, beta, mean, var


def prelu_slope(param_seed: int, edge_from: int, edge_to: int) -> np.float32:
    """Scalar negative-side slope in [0, 0.5)."""
    u = unit_float(param_word(param_seed, edge_from, edge_to, SLOT_PRELU, 0))
    return np.float32(0.25) * (u + np.float32(1.0))
