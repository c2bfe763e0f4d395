"""Compiled cores for the walk simulator.

One kernel drives all three time parametrizations.  Every iteration draws an
exponential holding time and then a uniform for the jump, in that order, in
every mode; discrete runs therefore share the jump chain with continuous runs
started from the same seed (the discrete run simply ignores the clock).
"""

import numpy as np
from numba import njit

MODE_DISCRETE = 0
MODE_CONTINUOUS = 1
MODE_BOUNDARY = 2


@njit(cache=True)
def walk_core(indptr, indices, n, rho_deg, start, mode, horizon, seed):
    """Run one walk; returns (counts, times, steps, elapsed, final_pos).

    counts[v]: number of chain positions at v (discrete clock).
    times[v]: continuous time spent at v (holding clock), truncated at the stop.
    horizon: step count (discrete), total time (continuous), or local time at
    the boundary vertex (boundary mode; raw time there is horizon * rho_deg).
    """
    np.random.seed(seed)
    counts = np.zeros(n + 1, dtype=np.int64)
    times = np.zeros(n + 1, dtype=np.float64)
    v = start
    steps = 0
    elapsed = 0.0
    counts[v] += 1
    if mode == MODE_BOUNDARY:
        target = horizon * rho_deg
        # target 0 from an interior start still runs: it stops on first
        # arrival at the boundary vertex, so elapsed is the hitting time
        if target <= 0.0 and v == n:
            return counts, times, steps, elapsed, v
    while True:
        tau = np.random.exponential(1.0)
        if mode == MODE_CONTINUOUS:
            if elapsed + tau >= horizon:
                times[v] += horizon - elapsed
                elapsed = horizon
                break
            times[v] += tau
            elapsed += tau
        elif mode == MODE_BOUNDARY:
            if v == n and times[n] + tau >= target:
                elapsed += target - times[n]
                times[n] = target
                break
            times[v] += tau
            elapsed += tau
        else:
            if steps >= horizon:
                break
        lo = indptr[v]
        hi = indptr[v + 1]
        v = indices[lo + np.int64(np.random.random() * (hi - lo))]
        steps += 1
        counts[v] += 1
    return counts, times, steps, elapsed, v


@njit(cache=True)
def cover_core(indptr, indices, n, start, seed, cap):
    """Discrete steps until every vertex of D_N has been visited."""
    np.random.seed(seed)
    visited = np.zeros(n + 1, dtype=np.uint8)
    v = start
    remaining = n
    if v < n:
        visited[v] = 1
        remaining -= 1
    steps = 0
    while remaining > 0:
        if steps >= cap:
            return -1
        np.random.exponential(1.0)  # keep draw order aligned with walk_core
        lo = indptr[v]
        hi = indptr[v + 1]
        v = indices[lo + np.int64(np.random.random() * (hi - lo))]
        steps += 1
        if v < n and visited[v] == 0:
            visited[v] = 1
            remaining -= 1
    return steps
