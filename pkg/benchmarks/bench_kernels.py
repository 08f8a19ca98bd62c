#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times the depthwise convolution, adaptive max-pool, and nearest-resize
kernels (forward and backward) on shapes representative of training the
super-resolution net on radar frames, and prints a side-by-side table.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from radargest.tensor import _kernels_py as pyk

try:
    from radargest import _core as ck
except ImportError:
    ck = None


def _time(fn, repeats: int) -> float:
    fn()  # warm-up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng: np.random.Generator):
    x = rng.standard_normal((10, 36, 32, 123))
    w = rng.standard_normal((36, 3, 3))
    gy = rng.standard_normal(x.shape)
    small = rng.standard_normal((10, 9, 32, 123))
    gy_small = rng.standard_normal((10, 9, 8, 30))
    yield "depthwise fwd  (10,36,32,123) k3", lambda m: m.depthwise_conv2d_fwd(x, w, 1, 1, 1)
    yield "depthwise bwd_x same", lambda m: m.depthwise_conv2d_bwd_x(gy, w, x.shape, 1, 1, 1)
    yield "depthwise bwd_w same", lambda m: m.depthwise_conv2d_bwd_w(gy, x, 3, 3, 1, 1, 1)
    yield "maxpool fwd    (10,9,32,123)->(8,30)", lambda m: m.adaptive_maxpool2d_fwd(small, 8, 30)
    yield "resize fwd     (10,9,8,30)->(32,123)", lambda m: m.resize_nearest_fwd(
        np.ascontiguousarray(small[:, :, :8, :30]), 32, 123
    )
    yield "resize bwd     (32,123)->(8,30)", lambda m: m.resize_nearest_bwd(
        rng.standard_normal((10, 9, 32, 123)), 8, 30
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if ck is None:
        print("compiled core not built; showing numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<42} {'numpy (ms)':>12} {'cython (ms)':>12} {'speedup':>9}")
    for name, call in cases(rng):
        t_py = _time(lambda: call(pyk), args.repeats) * 1e3
        if ck is not None:
            t_c = _time(lambda: call(ck), args.repeats) * 1e3
            print(f"{name:<42} {t_py:>12.3f} {t_c:>12.3f} {t_py / t_c:>8.2f}x")
        else:
            print(f"{name:<42} {t_py:>12.3f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
