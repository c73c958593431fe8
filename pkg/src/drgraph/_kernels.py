"""Jitted inner loop of the negative-sampling optimizer.

The kernel owns its randomness: a splitmix64 stream seeded per epoch (and
per worker in threaded mode), so a fixed seed replays the exact gradient
step sequence. Compiled nogil so worker threads can update the shared
position array concurrently on multi-core hosts.
"""

from __future__ import annotations

import numpy as np
from numba import int64, njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True, inline="always")
def _next_uniform(state):
    """Advance the splitmix64 state; return (uniform in [0,1), new state)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return np.float64(z >> _S11) * _INV53, state


@njit(cache=True, nogil=True, inline="always")
def _alias_pick(rec, u1, u2):
    """rec[:, 0] is the acceptance threshold, rec[:, 1] the alias id
    (stored as float64 so one cache line serves both)."""
    n = rec.shape[0]
    idx = int64(u1 * n)
    if idx >= n:
        idx = n - 1
    if u2 < rec[idx, 0]:
        return idx
    return int64(rec[idx, 1])


@njit(cache=True, nogil=True)
def sgd_steps(pos, pos_rec, pair_rec, neg_rec, node_map, mapped,
              n_steps, neg_count, b, gamma, eps, clip, lr, seed):
    """Run n_steps sampled gradient updates on pos, in place.

    Each step: one similarity-sampled attractive pair (unordered pair
    table plus a direction coin) and neg_count weight-sampled repulsive
    nodes, all drawn at the finest level and mapped to the current one;
    coincident images are skipped (repulsive draws retry up to 8 times).
    Both endpoints of every interaction move. Gradient components are
    clamped to +-clip before the learning rate. `mapped` False skips the
    (identity) ancestor lookup of the finest level. Returns the number
    of layout-distance evaluations.
    """
    state = seed
    dist_evals = int64(0)
    bf = np.float64(b)
    for _ in range(n_steps):
        u1, state = _next_uniform(state)
        u2, state = _next_uniform(state)
        e = _alias_pick(pos_rec, u1, u2)
        u3, state = _next_uniform(state)
        if u3 < 0.5:
            i0 = int64(pair_rec[e, 0])
            j0 = int64(pair_rec[e, 1])
        else:
            i0 = int64(pair_rec[e, 1])
            j0 = int64(pair_rec[e, 0])
        if mapped:
            i = int64(node_map[i0])
            j = int64(node_map[j0])
        else:
            i = i0
            j = j0
        if i != j:
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            ld2 = dx * dx + dy * dy
            dist_evals += 1
            if ld2 > 0.0:
                pw = 1.0
                for _p in range(b - 1):
                    pw *= ld2
                coef = -2.0 * bf * pw / (1.0 + pw * ld2)
                gx = coef * dx
                gy = coef * dy
                if gx > clip:
                    gx = clip
                elif gx < -clip:
                    gx = -clip
                if gy > clip:
                    gy = clip
                elif gy < -clip:
                    gy = -clip
                pos[i, 0] += lr * gx
                pos[i, 1] += lr * gy
                pos[j, 0] -= lr * gx
                pos[j, 1] -= lr * gy
        for _m in range(neg_count):
            target = int64(-1)
            for _attempt in range(9):
                u1, state = _next_uniform(state)
                u2, state = _next_uniform(state)
                c = _alias_pick(neg_rec, u1, u2)
                cm = int64(node_map[c]) if mapped else int64(c)
                if cm != i and cm != j:
                    target = cm
                    break
            if target < 0:
                continue
            dx = pos[i, 0] - pos[target, 0]
            dy = pos[i, 1] - pos[target, 1]
            ld2 = dx * dx + dy * dy
            dist_evals += 1
            if ld2 + eps > 0.0:
                pw = 1.0
                for _p in range(b - 1):
                    pw *= ld2
                coef = gamma * 2.0 * bf / ((ld2 + eps) * (1.0 + pw * ld2))
                gx = coef * dx
                gy = coef * dy
                if gx > clip:
                    gx = clip
                elif gx < -clip:
                    gx = -clip
                if gy > clip:
                    gy = clip
                elif gy < -clip:
                    gy = -clip
                pos[i, 0] += lr * gx
                pos[i, 1] += lr * gy
                pos[target, 0] -= lr * gx
                pos[target, 1] -= lr * gy
    return dist_evals
