"""Compare the numba and numpy kernel implementations.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both paths are imported directly so a single process can time them;
FAIRPM_NUMBA only controls which one the package itself binds to.
"""

import argparse
import time

import numpy as np

from fairpm._kernels import (USE_NUMBA, _min_cost_cover_loop,
                             _min_cost_cover_np, _window_counts_loop,
                             _window_counts_np)


def time_call(fn, *args, repeat):
    fn(*args)  # warm-up (and numba compilation)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_window_counts(repeat):
    rng = np.random.default_rng(0)
    times = np.sort(rng.integers(0, 10**9, size=200_000)).astype(np.int64)
    queries = rng.integers(0, 10**9, size=50_000).astype(np.int64)
    window = 7 * 24 * 3600 * 1000

    contenders = [("numpy", _window_counts_np)]
    if USE_NUMBA:
        from fairpm._kernels import _window_counts_jit
        contenders.append(("numba", lambda s, q, w: _window_counts_jit(
            s, q, np.int64(w))))
    else:
        contenders.append(("loop", _window_counts_loop))

    print(f"window_counts ({times.size} events, {queries.size} queries)")
    results = {}
    for name, fn in contenders:
        results[name] = time_call(fn, times, queries, window, repeat=repeat)
        print(f"  {name:6s} {results[name] * 1e3:8.2f} ms")
    return results


def bench_min_cost_cover(repeat):
    rng = np.random.default_rng(1)
    units = rng.integers(0, 50, size=400).astype(np.int64)
    costs = rng.integers(0, 20, size=400).astype(np.int64)
    required = 4000

    contenders = [("numpy", _min_cost_cover_np)]
    if USE_NUMBA:
        from fairpm._kernels import _min_cost_cover_jit
        contenders.append(("numba", _min_cost_cover_jit))
    else:
        contenders.append(("loop", _min_cost_cover_loop))

    print(f"min_cost_cover ({units.size} items, required={required})")
    results = {}
    for name, fn in contenders:
        results[name] = time_call(fn, units, costs, required, repeat=repeat)
        print(f"  {name:6s} {results[name] * 1e3:8.2f} ms")
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"numba available and enabled: {USE_NUMBA}")
    bench_window_counts(args.repeat)
    bench_min_cost_cover(args.repeat)


if __name__ == "__main__":
    main()
