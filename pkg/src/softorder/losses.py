"""Application losses built on the soft operators.

soft_spearman_loss penalizes the squared distance between a target rank vector
and the soft ranks of the scores, a differentiable surrogate for Spearman's
rank correlation.

soft_lts_loss is the soft least-trimmed-squares objective: sort the per-sample
losses in non-increasing order (softly), drop the k largest, and average the
rest. Small epsilon recovers hard trimming; large epsilon (quadratic) recovers
the plain mean, so the loss interpolates between trimmed and ordinary least
squares. lts_demo_fit runs a plain fixed-step gradient-descent linear
regression through that loss.

Both losses return (value, gradient); chaining the gradient into model
parameters is the caller's job (lts_demo_fit shows the pattern).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import soft_rank, soft_sort, vjp_soft
from ._validate import as_vector, canonical_regularizer, check_same_length

__all__ = [
    "TrimSpec",
    "soft_spearman_loss",
    "soft_lts_loss",
    "lts_demo_fit",
]


@dataclass(frozen=True)
class TrimSpec:
    """How to trim: discard the k largest losses, soften with epsilon."""

    k: int
    epsilon: float
    regularizer: str = "q"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k!r}")
        if not (float(self.epsilon) > 0 and np.isfinite(self.epsilon)):
            raise ValueError("epsilon must be strictly positive and finite")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "regularizer", canonical_regularizer(self.regularizer))


def soft_spearman_loss(target_rank, theta, epsilon: float = 1.0, regularizer: str = "q") -> tuple[float, np.ndarray]:
    """0.5 * ||target_rank - soft_rank(theta)||^2 and its theta-gradient.

    target_rank entries must lie in [1, n] (the range of rank values). The
    gradient is exact, via the soft-rank vjp with cotangent
    soft_rank(theta) - target_rank.
    """
    target = as_vector(target_rank, "target_rank")
    theta_arr = as_vector(theta, "theta")
    check_same_length(target, theta_arr, "target_rank", "theta")
    n = theta_arr.shape[0]
    if np.any(target < 1.0) or np.any(target > float(n)):
        raise ValueError(f"target_rank entries must lie in [1, {n}]")

    result = soft_rank(theta_arr, epsilon, regularizer, "desc")
    diff = result.values - target
    value = 0.5 * float(np.dot(diff, diff))
    grad = vjp_soft(result, diff)
    return value, grad


def soft_lts_loss(losses, spec: TrimSpec) -> tuple[float, np.ndarray]:
    """Mean of the n - k smallest soft-sorted losses and its gradient.

    The losses are soft-sorted in non-increasing order and the first k entries
    (the largest) are discarded. The gradient with respect to the loss vector
    is exact; for the quadratic regularizer its entries sum to 1.
    """
    losses_arr = as_vector(losses, "losses")
    n = losses_arr.shape[0]
    if not 0 <= spec.k < n:
        raise ValueError(f"k must satisfy 0 <= k < n = {n}, got k = {spec.k}")

    result = soft_sort(losses_arr, spec.epsilon, spec.regularizer, "desc")
    kept = n - spec.k
    value = float(np.sum(result.values[spec.k:])) / kept
    u = np.zeros(n)
    u[spec.k:] = 1.0 / kept
    grad = vjp_soft(result, u)
    return value, grad


def lts_demo_fit(features, targets, spec: TrimSpec, steps: int = 200, step_size: float = 0.1) -> np.ndarray:
    """Fit linear weights by gradient descent on the soft-trimmed loss.

    Per-sample losses are 0.5 * (y_i - <weights, x_i>)^2; each step trims them
    through soft_lts_loss and chains the trimming gradient into the weights.
    Deterministic for fixed inputs. Returns the weight vector; no intercept is
    added (append a constant feature column if one is wanted).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"features must be 2-D, got ndim={x.ndim}")
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError(
            f"targets must be a vector with one entry per feature row, "
            f"got {y.shape} for {x.shape[0]} rows"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("features and targets must be finite")
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")

    weights = np.zeros(x.shape[1])
    for _ in range(steps):
        residual = x @ weights - y
        losses = 0.5 * residual**2
        _, grad_losses = soft_lts_loss(losses, spec)
        grad_w = x.T @ (grad_losses * residual)
        weights = weights - step_size * grad_w
    return weights
