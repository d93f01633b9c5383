"""Numba-compiled twins of the numpy kernels.

Same accumulation orders as ``numpy_impl`` (forward for f64, pairwise tree
for f32), so outputs are bitwise identical; numba's default strict IEEE mode
performs no fused-multiply-add contraction.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward_f64(xp, w, dilation):
    n, _, hp, wp = xp.shape
    co, ci, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, co, h, wid), dtype=np.float64)
    for b in range(n):
        for o in range(co):
            for y in range(h):
                for x in range(wid):
                    acc = 0.0
                    for c in range(ci):
                        for kh in range(k):
                            for kw in range(k):
                                acc += w[o, c, kh, kw] * xp[b, c, y + kh * dilation, x + kw * dilation]
                    out[b, o, y, x] = acc
    return out


@njit(cache=True)
def _tree_fold_f32(buf, m):
    """In-place pairwise reduction of buf[:m]; result lands in buf[0]."""
    while m > 1:
        half = (m + 1) // 2
        for i in range(m // 2):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m % 2 == 1:
            buf[half - 1] = buf[m - 1]
        m = half
    return buf[0]


@njit(cache=True)
def conv2d_pairwise_f32(xp, w, dilation):
    n, _, hp, wp = xp.shape
    co, ci, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, co, h, wid), dtype=np.float32)
    t = ci * k * k
    buf = np.empty(t, dtype=np.float32)
    for b in range(n):
        for o in range(co):
            for y in range(h):
                for x in range(wid):
                    idx = 0
                    for c in range(ci):
                        for kh in range(k):
                            for kw in range(k):
                                buf[idx] = w[o, c, kh, kw] * xp[b, c, y + kh * dilation, x + kw * dilation]
                                idx += 1
                    out[b, o, y, x] = _tree_fold_f32(buf, t)
    return out


@njit(cache=True)
def depthwise_forward_f64(xp, w, dilation):
    n, c, hp, wp = xp.shape
    _, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, c, h, wid), dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            for y in range(h):
                for x in range(wid):
                    acc = 0.0
                    for kh in range(k):
                        for kw in range(k):
                            acc += w[ch, kh, kw] * xp[b, ch, y + kh * dilation, x + kw * dilation]
                    out[b, ch, y, x] = acc
    return out


@njit(cache=True)
def depthwise_pairwise_f32(xp, w, dilation):
    n, c, hp, wp = xp.shape
    _, k, _ = w.shape
    h = hp - (k - 1) * dilation
    wid = wp - (k - 1) * dilation
    out = np.empty((n, c, h, wid), dtype=np.float32)
    t = k * k
    buf = np.empty(t, dtype=np.float32)
    for b in range(n):
        for ch in range(c):
            for y in range(h):
                for x in range(wid):
                    idx = 0
                    for kh in range(k):
                        for kw in range(k):
                            buf[idx] = w[ch, kh, kw] * xp[b, ch, y + kh * dilation, x + kw * dilation]
                            idx += 1
                    out[b, ch, y, x] = _tree_fold_f32(buf, t)
    return out


@njit(cache=True)
def _maxpool(xp, window):
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    out = np.empty_like(xp[:, :, :h, :wid])
    for b in range(n):
        for ch in range(c):
            for y in range(h):
                for x in range(wid):
                    acc = xp[b, ch, y, x]
                    for kh in range(window):
                        for kw in range(window):
                            v = xp[b, ch, y + kh, x + kw]
                            # propagate NaN exactly like np.maximum
                            if v > acc or v != v:
                                acc = v
                    out[b, ch, y, x] = acc
    return out


def maxpool_f64(xp, window):
    return _maxpool(xp, window)


def maxpool_f32(xp, window):
    return _maxpool(xp, window)


@njit(cache=True)
def avgpool_forward_f64(xp, window):
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    area = np.float64(window * window)
    out = np.empty((n, c, h, wid), dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            for y in range(h):
                for x in range(wid):
                    acc = 0.0
                    for kh in range(window):
                        for kw in range(window):
                            acc += xp[b, ch, y + kh, x + kw]
                    out[b, ch, y, x] = acc / area
    return out


@njit(cache=True)
def avgpool_pairwise_f32(xp, window):
    n, c, hp, wp = xp.shape
    h = hp - (window - 1)
    wid = wp - (window - 1)
    area = np.float32(window * window)
    out = np.empty((n, c, h, wid), dtype=np.float32)
    t = window * window
    buf = np.empty(t, dtype=np.float32)
    for b in range(n):
        for ch in range(c):
            for y in range(h):
                for x in range(wid):
                    idx = 0
                    for kh in range(window):
                        for kw in range(window):
                            buf[idx] = xp[b, ch, y + kh, x + kw]
                            idx += 1
                    out[b, ch, y, x] = _tree_fold_f32(buf, t) / area
    return out
