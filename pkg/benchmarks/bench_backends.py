"""Benchmark the compiled backend against the pure-numpy fallback.

Times the three hot kernels on one synthetic workload per flag set and prints
a per-operation table with the compiled/python speedup. Run as

    python benchmarks/bench_backends.py [--T 500] [--n 15] [--draws 50] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from trendscan import available_backends, build_grid, set_backend, active_backend
from trendscan import _backend
from trendscan.kernels import packed_weights


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--T", type=int, default=500, help="series length (default 500)")
    parser.add_argument("--n", type=int, default=15, help="number of series (default 15)")
    parser.add_argument(
        "--draws", type=int, default=50, help="Gaussian draws per timing (default 50)"
    )
    parser.add_argument(
        "--repeat", type=int, default=3, help="timing repeats, best-of (default 3)"
    )
    args = parser.parse_args()

    grid = build_grid(args.T, "sim_s6")
    packed = packed_weights(args.T, grid)
    packed.dense()  # build the dense matrix outside the timed region
    rng = np.random.default_rng(0)
    values = rng.standard_normal((args.n, args.T))
    zs = rng.standard_normal((args.draws, args.n, args.T))
    zs -= zs.mean(axis=2, keepdims=True)
    agg = rng.standard_normal((args.n, len(grid)))
    pairs = np.array(
        [(i, j) for i in range(args.n) for j in range(i + 1, args.n)], dtype=np.int64
    )
    denom = np.abs(rng.standard_normal(len(pairs))) + 0.5

    ops = {
        "aggregate": lambda: _backend.aggregate(values, packed),
        "draw_max_stat": lambda: [_backend.draw_max_stat(z, packed) for z in zs],
        "pair_corrected": lambda: _backend.pair_corrected(agg, denom, packed.lam, pairs),
    }

    print(
        f"T={args.T} n={args.n} grid={len(grid)} draws={args.draws} "
        f"repeat={args.repeat} (best-of)"
    )
    timings: dict[str, dict[str, float]] = {}
    before = active_backend()
    try:
        for name in available_backends():
            set_backend(name)
            for op, fn in ops.items():
                fn()  # warm up caches and JIT-free code paths alike
                timings.setdefault(op, {})[name] = best_of(fn, args.repeat)
    finally:
        set_backend(before)

    width = max(len(op) for op in ops)
    header = f"{'operation':<{width}}  " + "".join(
        f"{name:>12}" for name in available_backends()
    )
    if {"python", "compiled"} <= set(available_backends()):
        header += f"{'speedup':>10}"
    print(header)
    for op in ops:
        row = f"{op:<{width}}  " + "".join(
            f"{timings[op][name] * 1e3:>10.3f}ms" for name in available_backends()
        )
        if {"python", "compiled"} <= set(timings[op]):
            row += f"{timings[op]['python'] / timings[op]['compiled']:>9.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
