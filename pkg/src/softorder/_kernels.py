"""Compiled inner loops for the pool-adjacent-violators solvers (internal).

Both kernels run a single left-to-right pass over the input, maintaining a
stack of blocks. A new element enters as a singleton block; while the last two
blocks violate the decreasing order of pooled values (strict violation only,
exact floating comparison), they are merged. Each merge removes one block, so
the total work is O(n).

The kernels write into caller-allocated arrays and return the number of blocks
so they stay allocation-free and can be called under `nogil`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["pav_quadratic", "pav_entropic"]


@njit(cache=True, nogil=True)
def pav_quadratic(diff, v, starts, gammas, sums, counts):
    """Pool-adjacent-violators for the quadratic objective.

    Solves min_v 0.5 * ||v - diff||^2 subject to v[0] >= v[1] >= ... where
    diff = s - w. The pooled value of a block is the mean of diff over the
    block, maintained as a running (sum, count) pair.

    Args:
        diff: input vector s - w, length n.
        v: output vector, length n.
        starts: output block start indices (0-based), length n workspace.
        gammas: output pooled block values, length n workspace.
        sums: output per-block sums of diff, length n workspace.
        counts: output per-block element counts, length n workspace.

    Returns:
        The number of blocks m; the first m entries of starts/gammas/sums/counts
        are valid.
    """
    n = diff.shape[0]
    m = 0
    for i in range(n):
        starts[m] = i
        sums[m] = diff[i]
        counts[m] = 1
        gammas[m] = diff[i]
        m += 1
        # merge while the order constraint is strictly violated
        while m > 1 and gammas[m - 2] < gammas[m - 1]:
            sums[m - 2] += sums[m - 1]
            counts[m - 2] += counts[m - 1]
            gammas[m - 2] = sums[m - 2] / counts[m - 2]
            m -= 1
    for j in range(m):
        end = starts[j + 1] if j + 1 < m else n
        g = gammas[j]
        for i in range(starts[j], end):
            v[i] = g
    return m


@njit(cache=True, nogil=True)
def _log_add_exp(a, b):
    # stable pairwise log(e^a + e^b); shift by the larger argument
    if a >= b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


@njit(cache=True, nogil=True)
def pav_entropic(s, w, v, starts, gammas, lse_s, lse_w, sums, counts):
    """Pool-adjacent-violators for the exponential objective.

    Solves min_v <e^(s - v), 1> + <e^w, v> subject to v[0] >= v[1] >= ...
    The pooled value of a block B is LSE(s_B) - LSE(w_B), maintained in
    log-space via pairwise shifted log-add-exp; e^s and e^w are never
    materialized.

    Args:
        s, w: input vectors, length n.
        v: output vector, length n.
        starts: output block start indices (0-based), length n workspace.
        gammas: output pooled block values, length n workspace.
        lse_s: output per-block log-sum-exp of s, length n workspace.
        lse_w: output per-block log-sum-exp of w, length n workspace.
        sums: output per-block sums of s - w, length n workspace.
        counts: output per-block element counts, length n workspace.

    Returns:
        The number of blocks m.
    """
    n = s.shape[0]
    m = 0
    for i in range(n):
        starts[m] = i
        lse_s[m] = s[i]
        lse_w[m] = w[i]
        sums[m] = s[i] - w[i]
        counts[m] = 1
        gammas[m] = s[i] - w[i]
        m += 1
        while m > 1 and gammas[m - 2] < gammas[m - 1]:
            lse_s[m - 2] = _log_add_exp(lse_s[m - 2], lse_s[m - 1])
            lse_w[m - 2] = _log_add_exp(lse_w[m - 2], lse_w[m - 1])
            sums[m - 2] += sums[m - 1]
            counts[m - 2] += counts[m - 1]
            gammas[m - 2] = lse_s[m - 2] - lse_w[m - 2]
            m -= 1
    for j in range(m):
        end = starts[j + 1] if j + 1 < m else n
        g = gammas[j]
        for i in range(starts[j], end):
            v[i] = g
    return m
