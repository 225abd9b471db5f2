"""Shared input validation helpers (internal)."""

from __future__ import annotations

import numpy as np

__all__ = ["as_vector", "as_readonly", "check_same_length", "canonical_regularizer"]

_REGULARIZERS = ("q", "e")


def canonical_regularizer(regularizer: str) -> str:
    tag = str(regularizer).lower()
    if tag not in _REGULARIZERS:
        raise ValueError(
            f"unknown regularizer {regularizer!r}; expected one of {_REGULARIZERS}"
        )
    return tag


def as_vector(x, name: str) -> np.ndarray:
    """Convert to an owned, finite, 1-D float64 array of length >= 1.

    Always copies, so the result can be frozen or mutated without touching
    caller-owned memory.
    """
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got ndim={arr.ndim}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def as_readonly(arr: np.ndarray) -> np.ndarray:
    # only freeze arrays we own; callers pass freshly allocated ones
    arr.flags.writeable = False
    return arr


def check_same_length(a: np.ndarray, b: np.ndarray, a_name: str, b_name: str) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{a_name} and {b_name} must have the same length, "
            f"got {a.shape[0]} and {b.shape[0]}"
        )
