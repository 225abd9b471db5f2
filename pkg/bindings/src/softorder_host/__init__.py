"""Batched forward and vjp entry points over softorder for autodiff hosts.

The core library works on one vector at a time and returns rich result
objects. Frameworks that register custom differentiable operations want a
narrower contract: plain 2-D arrays in, plain 2-D arrays out, and a separate
vjp callable for the backward pass. This package provides exactly that
surface and nothing else.

  BatchCall       validated bundle of (values, epsilon, regularizer, direction)
  host_soft_sort  rowwise soft sort of the batch
  host_soft_rank  rowwise soft rank of the batch
  host_vjp        rowwise cotangent pullback for either operator

Outputs are bitwise identical to calling the core operators row by row; the
input array is never written to. Conforming inputs (C-contiguous float64)
are used zero-copy; anything else is copied, never rejected. The numeric
kernels underneath release the interpreter lock, so host threads can run
batches concurrently; no state is shared between calls.

Only forward and vjp are exposed. Reverse-mode hosts need nothing more, and
keeping jvp out holds the surface to two functions. See the package README
for torch and jax registration recipes.
"""

from dataclasses import dataclass

import numpy as np

from softorder import __version__ as _core_version
from softorder.operators import soft_rank, soft_rank_kl_direct, soft_sort, vjp_soft

__all__ = [
    "BatchCall",
    "host_soft_sort",
    "host_soft_rank",
    "host_vjp",
    "__version__",
]

# versioned in lockstep with the core library it wraps
__version__ = _core_version

_REGULARIZERS = ("q", "e", "kl-direct")
_DIRECTIONS = ("desc", "asc")
_OPS = ("sort", "rank")


@dataclass(frozen=True)
class BatchCall:
    """One batch of independent instances: rows of a rectangular 2-D array.

    regularizer is "q", "e", or "kl-direct" (the last is rank-only, exactly
    as on the command line); direction is "desc" or "asc".
    """

    values: np.ndarray
    epsilon: float
    regularizer: str = "q"
    direction: str = "desc"

    def __post_init__(self):
        try:
            arr = np.asarray(self.values, dtype=np.float64)
        except (TypeError, ValueError):
            raise ValueError("values must be a rectangular numeric array") from None
        if arr.ndim != 2:
            raise ValueError(f"values must be 2-D (rows are instances), got ndim={arr.ndim}")
        if arr.shape[0] < 1:
            raise ValueError("values must contain at least one row")
        # zero-copy when already conforming; a silent copy otherwise
        arr = np.ascontiguousarray(arr)

        eps = float(self.epsilon)
        if not (eps > 0 and np.isfinite(eps)):
            raise ValueError("epsilon must be strictly positive and finite")
        reg = str(self.regularizer).lower()
        if reg not in _REGULARIZERS:
            raise ValueError(f"regularizer must be one of {_REGULARIZERS}, got {self.regularizer!r}")
        direction = str(self.direction).lower()
        if direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}, got {self.direction!r}")

        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "regularizer", reg)
        object.__setattr__(self, "direction", direction)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])


def _check_op(batch: BatchCall, op: str) -> None:
    if op not in _OPS:
        raise ValueError(f"op must be one of {_OPS}, got {op!r}")
    if batch.regularizer == "kl-direct" and op != "rank":
        raise ValueError("regularizer 'kl-direct' is only valid for ranking")


def _forward_row(row: np.ndarray, batch: BatchCall, op: str):
    if batch.regularizer == "kl-direct":
        work = row if batch.direction == "desc" else -row
        return soft_rank_kl_direct(work, batch.epsilon)
    if op == "sort":
        return soft_sort(row, batch.epsilon, batch.regularizer, batch.direction)
    return soft_rank(row, batch.epsilon, batch.regularizer, batch.direction)


def _run_forward(batch: BatchCall, op: str) -> np.ndarray:
    _check_op(batch, op)
    out = np.empty_like(batch.values)
    for i in range(batch.rows):
        try:
            out[i] = _forward_row(batch.values[i], batch, op).values
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    return out


def host_soft_sort(batch: BatchCall) -> np.ndarray:
    """Rowwise soft sort; row i equals soft_sort(values[i], ...).values."""
    return _run_forward(batch, "sort")


def host_soft_rank(batch: BatchCall) -> np.ndarray:
    """Rowwise soft rank; row i equals soft_rank(values[i], ...).values."""
    return _run_forward(batch, "rank")


def host_vjp(batch: BatchCall, cotangents, *, op: str) -> np.ndarray:
    """Pull the cotangent rows back to input space for the chosen operator.

    Row i of the result is the gradient of <cotangents[i], op(values[i])>
    with respect to values[i]. op must be passed by keyword ("sort" or
    "rank") so call sites stay readable next to the forward functions.
    """
    _check_op(batch, op)
    cot = np.ascontiguousarray(np.asarray(cotangents, dtype=np.float64))
    if cot.shape != batch.values.shape:
        raise ValueError(
            f"cotangents shape {cot.shape} does not match values shape {batch.values.shape}"
        )
    out = np.empty_like(batch.values)
    for i in range(batch.rows):
        try:
            result = _forward_row(batch.values[i], batch, op)
            grad = vjp_soft(result, cot[i])
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
        if batch.regularizer == "kl-direct" and batch.direction == "asc":
            # the ascending variant ranks -values; chain that negation
            grad = -grad
        out[i] = grad
    return out
