"""Counter-based parameter generation, reimplemented from its specification.

The engine's native backends and every adapter must produce bit-compatible
float32 parameter streams. One 64-bit word per parameter element:

    counter = from<<48 | to<<32 | slot<<24 | index     (16/16/8/24 bits)
    word    = mix64(param_seed XOR mix64(counter))     (SplitMix64 finalizer)
    unit    = float32((word >> 40) * 2^-23 - 1)        (exact in float32)

Weight scaling happens in float32: unit * float32(sqrt(3 / fan_in)).
Parity against the engine is pinned by the frozen test-vector file.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_MASK = (1 << 64) - 1

WEIGHT_SLOT = 0
BN_SCALE_SLOT = 0
BN_SHIFT_SLOT = 1
BN_MEAN_SLOT = 2
BN_VAR_SLOT = 3
PRELU_SLOT = 0

BN_EPSILON = np.float32(1e-5)


def mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def generator_word(seed: int, edge_from: int, edge_to: int, slot: int, index: int) -> int:
    counter = (edge_from << 48) | (edge_to << 32) | (slot << 24) | index
    return mix64((seed & _MASK) ^ mix64(counter))


@lru_cache(maxsize=2048)
def unit_stream(seed: int, edge_from: int, edge_to: int, slot: int, count: int) -> np.ndarray:
    words = [generator_word(seed, edge_from, edge_to, slot, i) for i in range(count)]
    units = np.array([(w >> 40) * 2.0**-23 - 1.0 for w in words], dtype=np.float64)
    out = units.astype(np.float32)
    out.flags.writeable = False
    return out


def conv_kernel(seed: int, edge_from: int, edge_to: int, out_ch: int, in_ch: int, k: int) -> np.ndarray:
    fan_in = in_ch * k * k
    scale = np.float32(np.sqrt(3.0 / fan_in))
    u = unit_stream(seed, edge_from, edge_to, WEIGHT_SLOT, out_ch * fan_in)
    return (u * scale).reshape(out_ch, in_ch, k, k)


def depthwise_kernel(seed: int, edge_from: int, edge_to: int, channels: int, k: int) -> np.ndarray:
    scale = np.float32(np.sqrt(3.0 / (k * k)))
    u = unit_stream(seed, edge_from, edge_to, WEIGHT_SLOT, channels * k * k)
    return (u * scale).reshape(channels, k, k)


def batchnorm_stats(seed: int, edge_from: int, edge_to: int, channels: int):
    tenth = np.float32(0.1)
    gamma = np.float32(1.0) + tenth * unit_stream(seed, edge_from, edge_to, BN_SCALE_SLOT, channels)
    beta = tenth * unit_stream(seed, edge_from, edge_to, BN_SHIFT_SLOT, channels)
    mean = tenth * unit_stream(seed, edge_from, edge_to, BN_MEAN_SLOT, channels)
    u = unit_stream(seed, edge_from, edge_to, BN_VAR_SLOT, channels)
    var = np.float32(0.5) + np.float32(0.25) * (u + np.float32(1.0))
    return gamma, beta, mean, var


def prelu_slope(seed: int, edge_from: int, edge_to: int) -> np.float32:
    u = np.float32((generator_word(seed, edge_from, edge_to, PRELU_SLOT, 0) >> 40) * 2.0**-23 - 1.0)
    return np.float32(0.25) * (u + np.float32(1.0))
