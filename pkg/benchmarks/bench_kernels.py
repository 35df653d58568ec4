"""Benchmark the compiled kernel core against the pure NumPy/SciPy fallback.

Usage: python benchmarks/bench_kernels.py [--points N] [--queries M] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from slamkit.kernels import available_backends


def timeit(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=20_000)
    parser.add_argument("--queries", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    target = rng.normal(size=(args.points, 3))
    queries = rng.normal(size=(args.queries, 3))
    depth = rng.integers(1, 5000, size=(480, 640)).astype(np.uint16)
    us = rng.uniform(0, 638.9, size=100_000)
    vs = rng.uniform(0, 478.9, size=100_000)

    rows = []
    for name, backend in backends.items():
        build = timeit(lambda: backend.NearestNeighborIndex(target), args.repeat)
        index = backend.NearestNeighborIndex(target)
        query = timeit(lambda: index.query(queries), args.repeat)
        unproj = timeit(
            lambda: backend.unproject_depth(depth, 525.0, 525.0, 319.5, 239.5, 0.0002, 2),
            args.repeat,
        )
        sample = timeit(
            lambda: backend.sample_depth_points(depth, 525.0, 525.0, 319.5, 239.5,
                                                0.0002, us, vs),
            args.repeat,
        )
        rows.append((name, build, query, unproj, sample))

    header = f"{'backend':>8} | {'kd build':>10} | {'nn query':>10} | {'unproject':>10} | {'subpixel':>10}"
    print(header)
    print("-" * len(header))
    for name, build, query, unproj, sample in rows:
        print(f"{name:>8} | {build * 1e3:8.2f} ms | {query * 1e3:8.2f} ms | "
              f"{unproj * 1e3:8.2f} ms | {sample * 1e3:8.2f} ms")
    if len(rows) == 2:
        by_name = {r[0]: r for r in rows}
        if "native" in by_name and "pure" in by_name:
            native, pure = by_name["native"], by_name["pure"]
            print("\nnative speedup: "
                  f"build x{pure[1] / native[1]:.2f}, query x{pure[2] / native[2]:.2f}, "
                  f"unproject x{pure[3] / native[3]:.2f}, subpixel x{pure[4] / native[4]:.2f}")


if __name__ == "__main__":
    main()
