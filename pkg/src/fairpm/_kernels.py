"""Hot numeric kernels with a numba fast path and a numpy fallback.

Set FAIRPM_NUMBA=0 to force the numpy implementations (useful for
debugging and for the benchmark in benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("FAIRPM_NUMBA", "1") == "0":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_enabled()


# --- sliding-window event counts (workload enrichment) ------------------


def _window_counts_np(sorted_times: np.ndarray, query_times: np.ndarray,
                      window: int) -> np.ndarray:
    hi = np.searchsorted(sorted_times, query_times, side="right")
    lo = np.searchsorted(sorted_times, query_times - window, side="right")
    return (hi - lo).astype(np.int64)


def _window_counts_loop(sorted_times, query_times, window):
    n = query_times.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        t = query_times[i]
        hi = np.searchsorted(sorted_times, t, side="right")
        lo = np.searchsorted(sorted_times, t - window, side="right")
        out[i] = hi - lo
    return out


# --- 0/1 min-cost covering knapsack (leaf relabeling) -------------------
#
# dp[i][u] = minimum cost over the first i items to accumulate at least u
# units; taking item i from state u moves the requirement to
# max(0, u - units[i]). Backtracking prefers not taking on ties.

_INFEASIBLE = np.int64(np.iinfo(np.int64).max // 4)


def _min_cost_cover_np(units: np.ndarray, costs: np.ndarray, required: int):
    n = units.shape[0]
    width = required + 1
    dp = np.full((n + 1, width), _INFEASIBLE, dtype=np.int64)
    dp[0, 0] = 0
    positions = np.arange(width)
    for i in range(n):
        prev = np.maximum(0, positions - units[i])
        dp[i + 1] = np.minimum(dp[i], dp[i, prev] + costs[i])
    if dp[n, required] >= _INFEASIBLE:
        return None
    chosen = np.zeros(n, dtype=np.bool_)
    u = required
    for i in range(n - 1, -1, -1):
        if dp[i + 1, u] < dp[i, u]:
            chosen[i] = True
            u = max(0, u - int(units[i]))
    return chosen


def _min_cost_cover_loop(units, costs, required):
    n = units.shape[0]
    width = required + 1
    dp = np.full((n + 1, width), _INFEASIBLE, dtype=np.int64)
    dp[0, 0] = 0
    for i in range(n):
        for u in range(width):
            prev = u - units[i]
            if prev < 0:
                prev = 0
            take = dp[i, prev] + costs[i]
            keep = dp[i, u]
            dp[i + 1, u] = take if take < keep else keep
    if dp[n, required] >= _INFEASIBLE:
        return None
    chosen = np.zeros(n, dtype=np.bool_)
    u = required
    for i in range(n - 1, -1, -1):
        if dp[i + 1, u] < dp[i, u]:
            chosen[i] = True
            prev = u - int(units[i])
            u = prev if prev > 0 else 0
    return chosen


if USE_NUMBA:
    from numba import njit

    _window_counts_jit = njit(cache=True)(_window_counts_loop)

    @njit(cache=True)
    def _min_cost_cover_dp_jit(units, costs, required):
        n = units.shape[0]
        width = required + 1
        dp = np.full((n + 1, width), _INFEASIBLE, dtype=np.int64)
        dp[0, 0] = 0
        for i in range(n):
            for u in range(width):
                prev = u - units[i]
                if prev < 0:
                    prev = 0
                take = dp[i, prev] + costs[i]
                keep = dp[i, u]
                dp[i + 1, u] = take if take < keep else keep
        return dp

    def _min_cost_cover_jit(units, costs, required):
        dp = _min_cost_cover_dp_jit(units, costs, required)
        n = units.shape[0]
        if dp[n, required] >= _INFEASIBLE:
            return None
        chosen = np.zeros(n, dtype=np.bool_)
        u = required
        for i in range(n - 1, -1, -1):
            if dp[i + 1, u] < dp[i, u]:
                chosen[i] = True
                u = max(0, u - int(units[i]))
        return chosen

    window_counts = lambda s, q, w: _window_counts_jit(s, q, np.int64(w))  # noqa: E731
    min_cost_cover = _min_cost_cover_jit
else:
    window_counts = _window_counts_np
    min_cost_cover = _min_cost_cover_np
