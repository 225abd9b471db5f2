"""Shared utilities for the test suite."""

import numpy as np

from softorder import oracle


def rel_error(candidate, reference) -> float:
    """max |A - B| over max(1, max |B|): absolute for small refs, relative for large."""
    candidate = np.asarray(candidate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(reference))) if reference.size else 1.0)
    return float(np.max(np.abs(candidate - reference))) / scale


def strictly_decreasing_w(rng, n: int, spread: float = 1.0) -> np.ndarray:
    """Random strictly decreasing vector (gaps bounded away from zero)."""
    gaps = spread * (0.1 + rng.random(n - 1)) if n > 1 else np.empty(0)
    start = rng.standard_normal()
    return start - np.concatenate([[0.0], np.cumsum(gaps)])


def tie_free(rng, n: int, scale: float = 1.0) -> np.ndarray:
    while True:
        theta = scale * rng.standard_normal(n)
        if np.unique(theta).size == n:
            return theta


def jacobian_from_jvp(jvp, n: int) -> np.ndarray:
    out = []
    probe = np.zeros(n)
    for j in range(n):
        probe[j] = 1.0
        out.append(np.asarray(jvp(probe)))
        probe[j] = 0.0
    return np.stack(out, axis=1)


def jacobian_from_vjp(vjp, n: int) -> np.ndarray:
    out = []
    probe = np.zeros(n)
    for i in range(n):
        probe[i] = 1.0
        out.append(np.asarray(vjp(probe)))
        probe[i] = 0.0
    return np.stack(out, axis=0)


def stable_instance(rng, draw, signature, h: float = 1e-6, budget: int = 200):
    """Draw inputs until the discrete signature is stable under +/- h bumps."""
    for _ in range(budget):
        x = draw(rng)
        if oracle.partition_stable(signature, x, h=h):
            return x
    raise AssertionError(f"no partition-stable instance found in {budget} draws")
