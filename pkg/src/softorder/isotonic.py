"""Chain-constrained convex solvers with block-structured exact derivatives.

Two problems are solved, both under the order constraint
v[0] >= v[1] >= ... >= v[n-1]:

  quadratic:   min_v 0.5 * ||v - (s - w)||^2
  entropic:    min_v <e^(s - v), 1> + <e^w, v>

A single pool-adjacent-violators pass solves either in O(n). The minimizer is
constant on an ordered partition of {0..n-1} into contiguous blocks; the
per-block value is

  quadratic:   gamma(B) = mean over B of (s_i - w_i)
  entropic:    gamma(B) = LSE(s_B) - LSE(w_B)

The partition also carries all derivative information: the Jacobian of v with
respect to s is block diagonal, each block being an averaging matrix
(quadratic: ones(|B|, |B|) / |B|; entropic: the rank-one matrix
1 (x) softmax(s_B)). With respect to w the blocks are negated, with softmax(w_B)
in the entropic case. jvp_isotonic and vjp_isotonic apply these blocks in O(n)
without forming any matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import pav_entropic, pav_quadratic
from ._validate import as_readonly, as_vector, check_same_length

__all__ = [
    "BlockStats",
    "BlockPartition",
    "IsotonicSolution",
    "merge_block_stats",
    "solve_isotonic_quadratic",
    "solve_isotonic_entropic",
    "jvp_isotonic",
    "vjp_isotonic",
]

@dataclass(frozen=True)
class BlockStats:
    """Sufficient statistics of one block's pooled value.

    count and sum_diff are always populated. lse_s/lse_w are the block
    log-sum-exps used by the entropic pooling formula; quadratic solutions do
    not compute them and report NaN.
    """

    count: int
    sum_diff: float
    lse_s: float
    lse_w: float


def merge_block_stats(left: BlockStats, right: BlockStats) -> BlockStats:
    """Combine the statistics of two adjacent blocks.

    Associative and order-independent in exact arithmetic: counts and sums add,
    log-sum-exps combine by logaddexp.
    """
    return BlockStats(
        count=left.count + right.count,
        sum_diff=left.sum_diff + right.sum_diff,
        lse_s=float(np.logaddexp(left.lse_s, right.lse_s)),
        lse_w=float(np.logaddexp(left.lse_w, right.lse_w)),
    )


@dataclass(frozen=True)
class BlockPartition:
    """Ordered contiguous blocks covering {0..n-1}, with pooled values.

    starts holds the 0-based first index of each block (starts[0] == 0,
    strictly ascending); gammas holds one pooled value per block. Pooled values
    are non-increasing; they are strictly decreasing unless the input contains
    exact ties (blocks are merged only on strict violation, so tied pooled
    values remain separate blocks).

    Per-block statistics are stored as parallel arrays (counts, sum_diffs,
    lse_s, lse_w); the `stats` property materializes them as BlockStats objects
    for inspection.
    """

    starts: np.ndarray
    gammas: np.ndarray
    counts: np.ndarray
    sum_diffs: np.ndarray
    lse_s: np.ndarray
    lse_w: np.ndarray

    @property
    def num_blocks(self) -> int:
        return int(self.starts.shape[0])

    @property
    def stats(self) -> tuple[BlockStats, ...]:
        return tuple(
            BlockStats(
                count=int(self.counts[j]),
                sum_diff=float(self.sum_diffs[j]),
                lse_s=float(self.lse_s[j]),
                lse_w=float(self.lse_w[j]),
            )
            for j in range(self.num_blocks)
        )

    def block_of(self, index: int) -> int:
        """Return the block number containing element `index`."""
        return int(np.searchsorted(self.starts, index, side="right")) - 1


@dataclass(frozen=True)
class IsotonicSolution:
    """Forward result: the minimizer plus everything the backward pass needs."""

    v: np.ndarray
    partition: BlockPartition
    s_sorted: np.ndarray
    w_sorted: np.ndarray
    regularizer: str

    @property
    def n(self) -> int:
        return int(self.v.shape[0])


def _solve(s, w, regularizer: str) -> IsotonicSolution:
    s_arr = as_vector(s, "s")
    w_arr = as_vector(w, "w")
    check_same_length(s_arr, w_arr, "s", "w")
    n = s_arr.shape[0]

    v = np.empty(n)
    starts = np.empty(n, dtype=np.int64)
    gammas = np.empty(n)
    sums = np.empty(n)
    counts = np.empty(n, dtype=np.int64)

    if regularizer == "q":
        m = pav_quadratic(s_arr - w_arr, v, starts, gammas, sums, counts)
        lse_s = np.full(m, np.nan)
        lse_w = np.full(m, np.nan)
    else:
        lse_s_ws = np.empty(n)
        lse_w_ws = np.empty(n)
        m = pav_entropic(
            s_arr, w_arr, v, starts, gammas, lse_s_ws, lse_w_ws, sums, counts
        )
        lse_s = lse_s_ws[:m].copy()
        lse_w = lse_w_ws[:m].copy()

    partition = BlockPartition(
        starts=as_readonly(starts[:m].copy()),
        gammas=as_readonly(gammas[:m].copy()),
        counts=as_readonly(counts[:m].copy()),
        sum_diffs=as_readonly(sums[:m].copy()),
        lse_s=as_readonly(lse_s),
        lse_w=as_readonly(lse_w),
    )
    return IsotonicSolution(
        v=as_readonly(v),
        partition=partition,
        s_sorted=as_readonly(s_arr),
        w_sorted=as_readonly(w_arr),
        regularizer=regularizer,
    )


def solve_isotonic_quadratic(s, w) -> IsotonicSolution:
    """Minimize 0.5 * ||v - (s - w)||^2 under v[0] >= ... >= v[n-1].

    s and w need not be sorted; the problem is well defined for any finite
    inputs. O(n) time and space.
    """
    return _solve(s, w, "q")


def solve_isotonic_entropic(s, w) -> IsotonicSolution:
    """Minimize <e^(s - v), 1> + <e^w, v> under v[0] >= ... >= v[n-1].

    All pooled values are computed in shifted log-space; e^s and e^w are never
    materialized, so inputs of large magnitude do not overflow. O(n) time.
    """
    return _solve(s, w, "e")


_ARGUMENTS = ("s", "w")


def _check_backward_inputs(sol: IsotonicSolution, u, argument: str) -> np.ndarray:
    if argument not in _ARGUMENTS:
        raise ValueError(f"argument must be 's' or 'w', got {argument!r}")
    u_arr = np.asarray(u, dtype=np.float64)
    if u_arr.ndim != 1 or u_arr.shape[0] != sol.n:
        raise ValueError(
            f"u must be a vector of length {sol.n}, got shape {u_arr.shape}"
        )
    return u_arr


def _block_softmax(x: np.ndarray, partition: BlockPartition) -> np.ndarray:
    """Per-block softmax weights of x, flattened back to length n."""
    starts = partition.starts
    counts = partition.counts
    peak = np.maximum.reduceat(x, starts)
    shifted = np.exp(x - np.repeat(peak, counts))
    denom = np.add.reduceat(shifted, starts)
    return shifted / np.repeat(denom, counts)


def jvp_isotonic(sol: IsotonicSolution, u, argument: str) -> np.ndarray:
    """Jacobian-vector product (dv/d(argument)) @ u in O(n).

    Quadratic: every coordinate of a block receives the block mean of u
    (negated for argument 'w'). Entropic: every coordinate of a block receives
    <softmax(s_B), u_B> for argument 's' and -<softmax(w_B), u_B> for 'w'.
    """
    u_arr = _check_backward_inputs(sol, u, argument)
    partition = sol.partition
    starts, counts = partition.starts, partition.counts

    if sol.regularizer == "q":
        block = np.add.reduceat(u_arr, starts) / counts
        out = np.repeat(block, counts)
        return -out if argument == "w" else out

    if argument == "s":
        weights = _block_softmax(sol.s_sorted, partition)
        return np.repeat(np.add.reduceat(weights * u_arr, starts), counts)
    weights = _block_softmax(sol.w_sorted, partition)
    return -np.repeat(np.add.reduceat(weights * u_arr, starts), counts)


def vjp_isotonic(sol: IsotonicSolution, u, argument: str) -> np.ndarray:
    """Vector-Jacobian product u @ (dv/d(argument)) in O(n).

    The quadratic blocks are symmetric, so this equals jvp_isotonic. The
    entropic blocks are constant along columns, so the transpose spreads each
    block's sum of u through the softmax weights.
    """
    u_arr = _check_backward_inputs(sol, u, argument)
    partition = sol.partition
    starts, counts = partition.starts, partition.counts

    if sol.regularizer == "q":
        block = np.add.reduceat(u_arr, starts) / counts
        out = np.repeat(block, counts)
        return -out if argument == "w" else out

    block_sums = np.repeat(np.add.reduceat(u_arr, starts), counts)
    if argument == "s":
        return _block_softmax(sol.s_sorted, partition) * block_sums
    return -_block_softmax(sol.w_sorted, partition) * block_sums
