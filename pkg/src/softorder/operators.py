"""Hard and soft sorting/ranking operators with exact O(n) gradients.

Hard operators: argsort (descending, stable), hard_sort, hard_rank (1-based,
rank 1 marks the largest value).

Soft operators replace the discontinuous hard maps with regularized
permutahedron projections:

  soft_sort(theta) = P(rho / eps, sort_desc(theta))
  soft_rank(theta) = P(-theta / eps, rho)

with rho = (n, n-1, ..., 1). As eps -> 0 they recover the hard outputs; as
eps -> infinity they collapse to constant vectors (quadratic: the mean;
entropic: the log-mean-of-exponentials). Ascending variants use the negation
identities (sort: -soft_sort(-theta); rank: soft_rank(-theta)); direction is
metadata, never a post-sort.

soft_rank_kl_direct is the alternative rank operator exp(P_e(-theta/eps,
log rho)): the KL projection is taken directly onto P(rho) and mapped back
from log space, so its values lie in P(rho) exactly.

Every soft result carries a ProjectionContext; vjp_soft/jvp_soft turn it into
exact theta-gradients by the chain rule in O(n), including through the input
argsort of soft_sort and the exponential of soft_rank_kl_direct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import Permutation, ProjectionContext, jvp_projection, project, vjp_projection
from ._validate import as_readonly, as_vector, canonical_regularizer

__all__ = [
    "SoftOpResult",
    "argsort",
    "hard_sort",
    "hard_rank",
    "soft_sort",
    "soft_rank",
    "soft_rank_kl_direct",
    "vjp_soft",
    "jvp_soft",
    "batched",
]

_DIRECTIONS = ("desc", "asc")


def _canonical_direction(direction: str) -> str:
    tag = str(direction).lower()
    if tag not in _DIRECTIONS:
        raise ValueError(f"direction must be 'asc' or 'desc', got {direction!r}")
    return tag


def _check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not (eps > 0 and np.isfinite(eps)):
        raise ValueError("epsilon must be strictly positive and finite")
    return eps


@dataclass(frozen=True)
class SoftOpResult:
    """A soft operator's values plus the state needed for exact gradients.

    input_permutation is the descending argsort of the (direction-adjusted)
    input for soft sort, and the identity for the rank operators. kind
    identifies the producing operator so vjp_soft/jvp_soft can dispatch the
    chain rule.
    """

    values: np.ndarray
    context: ProjectionContext
    input_permutation: Permutation
    epsilon: float
    regularizer: str
    direction: str
    kind: str


def argsort(theta) -> Permutation:
    """Descending stable argsort: ties keep the lowest original index first."""
    theta_arr = as_vector(theta, "theta")
    fwd = np.argsort(-theta_arr, kind="stable")
    return Permutation.from_forward(fwd)


def hard_sort(theta) -> np.ndarray:
    """Values of theta in non-increasing order."""
    theta_arr = as_vector(theta, "theta")
    perm = argsort(theta_arr)
    return theta_arr[perm.forward]


def hard_rank(theta) -> np.ndarray:
    """1-based descending ranks: the largest value gets rank 1.

    Equals the inverse of the argsort permutation plus one; ties are resolved
    stably (the earlier index receives the smaller rank).
    """
    theta_arr = as_vector(theta, "theta")
    perm = argsort(theta_arr)
    return (perm.inverse + 1).astype(np.int64)


def _rho(n: int) -> np.ndarray:
    return np.arange(n, 0, -1, dtype=np.float64)


def soft_sort(theta, epsilon: float = 1.0, regularizer: str = "q", direction: str = "desc") -> SoftOpResult:
    """Differentiable sorting: values approach hard_sort as epsilon -> 0.

    Descending mode projects rho/epsilon onto the permutahedron of the sorted
    input; ascending mode is -soft_sort(-theta) with non-decreasing values.
    """
    eps = _check_epsilon(epsilon)
    tag = canonical_regularizer(regularizer)
    direction = _canonical_direction(direction)
    theta_arr = as_vector(theta, "theta")
    work = theta_arr if direction == "desc" else -theta_arr

    in_perm = argsort(work)
    w = work[in_perm.forward]
    n = theta_arr.shape[0]
    values, ctx = project(_rho(n) / eps, w, tag)
    if direction == "asc":
        values = -values
    return SoftOpResult(
        values=as_readonly(values),
        context=ctx,
        input_permutation=in_perm,
        epsilon=eps,
        regularizer=tag,
        direction=direction,
        kind="sort",
    )


def soft_rank(theta, epsilon: float = 1.0, regularizer: str = "q", direction: str = "desc") -> SoftOpResult:
    """Differentiable ranking: values approach hard_rank as epsilon -> 0.

    Descending mode projects -theta/epsilon onto P(rho) with
    rho = (n, ..., 1); the output lives in [1, n]. Ascending mode ranks -theta,
    so rank 1 marks the smallest value.
    """
    eps = _check_epsilon(epsilon)
    tag = canonical_regularizer(regularizer)
    direction = _canonical_direction(direction)
    theta_arr = as_vector(theta, "theta")
    work = theta_arr if direction == "desc" else -theta_arr

    n = theta_arr.shape[0]
    values, ctx = project(-work / eps, _rho(n), tag)
    return SoftOpResult(
        values=as_readonly(values),
        context=ctx,
        input_permutation=Permutation.identity(n),
        epsilon=eps,
        regularizer=tag,
        direction=direction,
        kind="rank",
    )


def soft_rank_kl_direct(theta, epsilon: float = 1.0) -> SoftOpResult:
    """Rank operator from the direct KL projection onto P(rho).

    Computes exp(P_e(-theta/eps, log rho)): the entropic projection is taken
    with target log rho and mapped back through the exponential, so the values
    lie in P(rho) exactly (they sum to n(n+1)/2). Descending semantics.
    """
    eps = _check_epsilon(epsilon)
    theta_arr = as_vector(theta, "theta")
    n = theta_arr.shape[0]
    values, ctx = project(-theta_arr / eps, np.log(_rho(n)), "e")
    return SoftOpResult(
        values=as_readonly(np.exp(values)),
        context=ctx,
        input_permutation=Permutation.identity(n),
        epsilon=eps,
        regularizer="e",
        direction="desc",
        kind="rank-kl-direct",
    )


def _check_cotangent(result: SoftOpResult, u) -> np.ndarray:
    u_arr = np.asarray(u, dtype=np.float64)
    n = result.values.shape[0]
    if u_arr.ndim != 1 or u_arr.shape[0] != n:
        raise ValueError(f"u must be a vector of length {n}, got shape {u_arr.shape}")
    return u_arr


def vjp_soft(result: SoftOpResult, u) -> np.ndarray:
    """Gradient of <u, op(theta)> with respect to theta, in O(n).

    Soft sort routes the projection's w-cotangent back through the recorded
    input argsort (the negation identities of the ascending mode cancel). Soft
    rank chains through z = -theta/eps, flipping sign for ascending mode. The
    direct KL rank additionally chains through its elementwise exponential.
    """
    u_arr = _check_cotangent(result, u)
    ctx = result.context

    if result.kind == "sort":
        grad_w = vjp_projection(ctx, u_arr, "w")
        grad = np.empty_like(grad_w)
        grad[result.input_permutation.forward] = grad_w
        return grad

    if result.kind == "rank":
        grad = vjp_projection(ctx, u_arr, "z") / result.epsilon
        return -grad if result.direction == "desc" else grad

    # rank-kl-direct: d exp(P) = values * dP, chained into the cotangent
    grad = vjp_projection(ctx, result.values * u_arr, "z") / result.epsilon
    return -grad


def jvp_soft(result: SoftOpResult, u) -> np.ndarray:
    """Directional derivative of op(theta) along u, in O(n)."""
    u_arr = _check_cotangent(result, u)
    ctx = result.context

    if result.kind == "sort":
        return jvp_projection(ctx, u_arr[result.input_permutation.forward], "w")

    if result.kind == "rank":
        out = jvp_projection(ctx, u_arr, "z") / result.epsilon
        return -out if result.direction == "desc" else out

    out = jvp_projection(ctx, u_arr, "z") / result.epsilon
    return result.values * -out


_BATCH_OPS = ("sort", "rank")


def batched(op: str, matrix, epsilon: float = 1.0, regularizer: str = "q", direction: str = "desc") -> np.ndarray:
    """Apply a soft operator to every row of a 2-D array.

    op is "sort" or "rank"; regularizer additionally accepts "kl-direct"
    (valid with "rank" only), mirroring the command-line vocabulary. Rows are
    independent; the output row order matches the input. Results are identical
    to calling the operator on each row.
    """
    if op not in _BATCH_OPS:
        raise ValueError(f"op must be one of {_BATCH_OPS}, got {op!r}")
    reg = str(regularizer).lower()
    if reg == "kl-direct" and op != "rank":
        raise ValueError("regularizer 'kl-direct' is only valid with op='rank'")
    if reg != "kl-direct":
        reg = canonical_regularizer(reg)
    eps = _check_epsilon(epsilon)
    direction = _canonical_direction(direction)
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"matrix must be 2-D (rows are instances), got ndim={mat.ndim}")

    out = np.empty_like(mat)
    for i in range(mat.shape[0]):
        row = mat[i]
        if reg == "kl-direct":
            work = row if direction == "desc" else -row
            out[i] = soft_rank_kl_direct(work, eps).values
        elif op == "sort":
            out[i] = soft_sort(row, eps, reg, direction).values
        else:
            out[i] = soft_rank(row, eps, reg, direction).values
    return out
