"""Pure-numpy kernels: the semantic reference for the hot inner loops.

Accumulation order is part of the contract, not an implementation detail:
the f64 kernels add terms in forward (ci, kh, kw) order, the f32 kernels
reduce the same terms with a pairwise tree. The numba twins in
``numba_impl`` must match these bit for bit, which the test suite asserts.

All convolution/pool kernels take pre-padded inputs and perform a valid
(no-padding) sweep, so output height/width equal the unpadded input's.
"""

from __future__ import annotations

import numpy as np


def _tree_reduce(terms: list):
    """Pairwise reduction: adjacent pairs, odd tail carried unchanged."""
    while len(terms) > 1:
        nxt = [terms[2 * i] + terms[2 * i + 1] for i in range(len(terms) // 2)]
        if len(terms) % 2 == 1:
            nxt.append(terms[-1])
        terms = nxt
    return terms[0]


def conv2d_forward_f64(xp: np.ndarray, w: np.ndarray, dilation: int) -> np.ndarray:
    n, _, hp, wp = xp.shape
    co, ci, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.zeros((n, co, h, wid), dtype=np.float64)
    for o in range(co):
        for c in range(ci):
            for kh in range(k):
                for kw in range(k):
                    out[:, o] += w[o, c, kh, kw] * xp[:, c, kh * dilation : kh * dilation + h, kw * dilation : kw * dilation + wid]
    return out


def conv2d_pairwise_f32(xp: np.ndarray, w: np.ndarray, dilation: int) -> np.ndarray:
    n, _, hp, wp = xp.shape
    co, ci, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, co, h, wid), dtype=np.float32)
    for o in range(co):
        terms = [
            w[o, c, kh, kw] * xp[:, c, kh * dilation : kh * dilation + h, kw * dilation : kw * dilation + wid]
            for c in range(ci)
            for kh in range(k)
            for kw in range(k)
        ]
        out[:, o] = _tree_reduce(terms)
    return out


def depthwise_forward_f64(xp: np.ndarray, w: np.ndarray, dilation: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    _, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.zeros((n, c, h, wid), dtype=np.float64)
    for ch in range(c):
        for kh in range(k):
            for kw in range(k):
                out[:, ch] += w[ch, kh, kw] * xp[:, ch, kh * dilation : kh * dilation + h, kw * dilation : kw * dilation + wid]
    return out


def depthwise_pairwise_f32(xp: np.ndarray, w: np.ndarray, dilation: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    _, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, c, h, wid), dtype=np.float32)
    for ch in range(c):
        terms = [
            w[ch, kh, kw] * xp[:, ch, kh * dilation : kh * dilation + h, kw * dilation : kw * dilation + wid]
            for kh in range(k)
            for kw in range(k)
        ]
        out[:, ch] = _tree_reduce(terms)
    return out


def _maxpool(xp: np.ndarray, window: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    slices = [
        xp[:, :, kh : kh + h, kw : kw + wid]
        for kh in range(window)
        for kw in range(window)
    ]
    # np.maximum propagates NaN, matching the explicit check in the numba twin.
    return np.maximum.reduce(slices)


def maxpool_f64(xp: np.ndarray, window: int) -> np.ndarray:
    return _maxpool(xp, window)


def maxpool_f32(xp: np.ndarray, window: int) -> np.ndarray:
    return _maxpool(xp, window)


def avgpool_forward_f64(xp: np.ndarray, window: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    out = np.zeros((n, c, h, wid), dtype=np.float64)
    for kh in range(window):
        for kw in range(window):
            out += xp[:, :, kh : kh + h, kw : kw + wid]
    return out / np.float64(window * window)


def avgpool_pairwise_f32(xp: np.ndarray, window: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    terms = [
        xp[:, :, kh : kh + h, kw : kw + wid]
        for kh in range(window)
        for kw in range(window)
    ]
    return _tree_reduce(terms) / np.float32(window * window)
