"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a few shapes, reports wall-clock speedups, and
verifies the two paths agree bitwise (their contract: identical accumulation
orders, no fast-math).

    python benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from modelfuzz.kernels import numba_impl, numpy_impl

CASES = [
    ("conv2d_forward_f64", "conv", dict(n=1, c=8, size=32, k=3, dilation=1, dtype=np.float64)),
    ("conv2d_forward_f64", "conv", dict(n=1, c=16, size=64, k=3, dilation=1, dtype=np.float64)),
    ("conv2d_pairwise_f32", "conv", dict(n=1, c=8, size=32, k=3, dilation=1, dtype=np.float32)),
    ("conv2d_pairwise_f32", "conv", dict(n=1, c=16, size=64, k=5, dilation=1, dtype=np.float32)),
    ("depthwise_forward_f64", "depthwise", dict(n=1, c=16, size=64, k=3, dilation=1, dtype=np.float64)),
    ("depthwise_pairwise_f32", "depthwise", dict(n=1, c=16, size=64, k=3, dilation=2, dtype=np.float32)),
    ("maxpool_f64", "pool", dict(n=1, c=16, size=64, k=3, dtype=np.float64)),
    ("avgpool_forward_f64", "pool", dict(n=1, c=16, size=64, k=3, dtype=np.float64)),
    ("avgpool_pairwise_f32", "pool", dict(n=1, c=16, size=64, k=2, dtype=np.float32)),
]


def build_args(kind, spec, rng):
    k = spec["k"]
    dilation = spec.get("dilation", 1)
    pad = (k - 1) * dilation
    xp = rng.normal(size=(spec["n"], spec["c"], spec["size"] + pad, spec["size"] + pad)).astype(spec["dtype"])
    if kind == "conv":
        w = rng.normal(size=(spec["c"], spec["c"], k, k)).astype(spec["dtype"])
        return (xp, w, dilation)
    if kind == "depthwise":
        w = rng.normal(size=(spec["c"], k, k)).astype(spec["dtype"])
        return (xp, w, dilation)
    return (xp, k)


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bitwise_equal(a, b):
    view = np.uint64 if a.dtype == np.float64 else np.uint32
    return np.array_equal(a.view(view), b.view(view))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'shape':<22}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>9}  agree")
    mismatches = 0
    for name, kind, spec in CASES:
        call_args = build_args(kind, spec, rng)
        np_fn = getattr(numpy_impl, name)
        nb_fn = getattr(numba_impl, name)
        nb_fn(*call_args)  # warm the JIT outside the timed region
        t_np = best_of(np_fn, call_args, args.repeats)
        t_nb = best_of(nb_fn, call_args, args.repeats)
        agree = bitwise_equal(np_fn(*call_args), nb_fn(*call_args))
        mismatches += not agree
        shape = f"c={spec['c']} hw={spec['size']} k={spec['k']}d{spec.get('dilation', 1)}"
        print(
            f"{name:<24}{shape:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}"
            f"{t_np / t_nb:>8.1f}x  {'yes' if agree else 'NO'}"
        )
    if mismatches:
        raise SystemExit(f"{mismatches} kernels disagree between paths")
    print("\nall kernels agree bitwise across paths")


if __name__ == "__main__":
    main()
