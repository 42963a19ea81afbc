"""Benchmark the numba kernels against their numpy/python fallbacks.

Usage: python benchmarks/bench_kernels.py [--n 1200] [--length 1024] [--repeat 3]

Overrides CHARTBEAM_BACKEND internally to time both paths on identical
inputs and prints the speedup. The numba path is warmed once so JIT
compilation does not pollute the timings.
"""

import argparse
import os
import time

import numpy as np

from chartbeam import backends, kernels
from chartbeam.chart import DistanceMatrix, knn_graph


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(name, fn, repeat):
    os.environ["CHARTBEAM_BACKEND"] = "numpy"
    t_numpy, r_numpy = time_call(fn, repeat)
    if backends.NUMBA_AVAILABLE:
        os.environ["CHARTBEAM_BACKEND"] = "numba"
        fn()  # warm the JIT
        t_numba, r_numba = time_call(fn, repeat)
        agree = np.allclose(r_numba, r_numpy, rtol=1e-9, atol=1e-12,
                            equal_nan=True)
        print(f"{name:<28} numpy {t_numpy*1e3:9.1f} ms   numba "
              f"{t_numba*1e3:9.1f} ms   speedup {t_numpy/t_numba:6.2f}x   "
              f"agree={agree}")
    else:
        print(f"{name:<28} numpy {t_numpy*1e3:9.1f} ms   (numba unavailable)")
    os.environ.pop("CHARTBEAM_BACKEND", None)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1200)
    parser.add_argument("--length", type=int, default=1024)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    h = rng.standard_normal((args.n, args.length)) \
        + 1j * rng.standard_normal((args.n, args.length))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    print(f"pairwise distances: n={args.n}, length={args.length}")
    bench("pairwise_pi_distances", lambda: kernels.pairwise_pi_distances(h),
          args.repeat)

    # a k-NN graph over random points gives a realistic sparse topology
    pts = rng.uniform(0, 100, (args.n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dm = DistanceMatrix.from_square(np.sqrt((diff**2).sum(-1)))
    g = knn_graph(dm, args.k)
    print(f"all-pairs dijkstra: n={args.n}, edges={len(g.indices)}")
    bench("dijkstra_all_pairs",
          lambda: kernels.dijkstra_all_pairs(g.indptr, g.indices, g.weights, g.n),
          args.repeat)


if __name__ == "__main__":
    main()
