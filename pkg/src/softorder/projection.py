"""Regularized projections onto the permutahedron and their exact derivatives.

The permutahedron P(w) is the convex hull of all permutations of the vector w.
Two projections of a point z are provided, selected by the regularizer tag:

  "q": the Euclidean projection of z onto P(w)
  "e": the log-space KL projection, i.e. log of the KL projection of e^z
       onto P(e^w)

Both reduce to a chain-constrained convex problem on sorted inputs: with
sigma the descending argsort of z and s = z[sigma],

  P(z, w) = z - v(s, w)[sigma^-1]

where v is the corresponding isotonic minimizer. The derivative of the
projection therefore inherits the isotonic solver's block structure,
conjugated by the sorting permutation; jvp_projection and vjp_projection apply
it in O(n).

The module also provides the two thresholds epsilon_min/epsilon_max between
which the projection of z/eps is "interesting", and limit_projection, the
closed forms valid outside that window (no solver call involved).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isotonic import (
    IsotonicSolution,
    jvp_isotonic,
    solve_isotonic_entropic,
    solve_isotonic_quadratic,
    vjp_isotonic,
)
from ._validate import as_readonly, as_vector, canonical_regularizer, check_same_length

__all__ = [
    "Permutation",
    "ProjectionContext",
    "project",
    "jvp_projection",
    "vjp_projection",
    "epsilon_min",
    "epsilon_max",
    "limit_projection",
]


@dataclass(frozen=True)
class Permutation:
    """A permutation of {0..n-1} together with its inverse.

    forward[i] is the source index of the element placed at position i;
    inverse[forward[i]] == i for all i.
    """

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward: np.ndarray) -> "Permutation":
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(forward.shape[0], dtype=forward.dtype)
        return cls(forward=as_readonly(forward), inverse=as_readonly(inverse))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(forward=as_readonly(idx), inverse=as_readonly(idx.copy()))

    @property
    def n(self) -> int:
        return int(self.forward.shape[0])


@dataclass(frozen=True)
class ProjectionContext:
    """Saved forward state enabling O(n) backward passes without recomputation."""

    sigma: Permutation
    solution: IsotonicSolution
    regularizer: str
    w_sorted: np.ndarray

    @property
    def sigma_inv(self) -> Permutation:
        return Permutation(forward=self.sigma.inverse, inverse=self.sigma.forward)

    @property
    def n(self) -> int:
        return self.sigma.n


def _descending_argsort(z: np.ndarray) -> np.ndarray:
    # stable: tied values keep their original relative order, so the lowest
    # original index comes first among ties
    return np.argsort(-z, kind="stable")


def _check_sorted_desc(w: np.ndarray, name: str) -> None:
    if w.shape[0] > 1 and np.any(np.diff(w) > 0):
        raise ValueError(f"{name} must be sorted in non-increasing order")


def project(z, w, regularizer: str = "q") -> tuple[np.ndarray, ProjectionContext]:
    """Project z onto the permutahedron of w under the chosen regularizer.

    w must already be sorted in non-increasing order (checked); sorting
    user-facing inputs is the caller's job. Returns the projected vector and a
    context for jvp_projection/vjp_projection. O(n log n) time, O(n) space.
    """
    tag = canonical_regularizer(regularizer)
    z_arr = as_vector(z, "z")
    w_arr = as_vector(w, "w")
    check_same_length(z_arr, w_arr, "z", "w")
    _check_sorted_desc(w_arr, "w")

    fwd = _descending_argsort(z_arr)
    sigma = Permutation.from_forward(fwd)
    s = z_arr[fwd]
    if tag == "q":
        sol = solve_isotonic_quadratic(s, w_arr)
    else:
        sol = solve_isotonic_entropic(s, w_arr)
    if z_arr.shape[0] == 1:
        # the polytope is the single point w; z - v cancels catastrophically
        # when |z| >> |w|, so return the point itself
        values = w_arr.copy()
    else:
        values = z_arr - sol.v[sigma.inverse]
    ctx = ProjectionContext(
        sigma=sigma,
        solution=sol,
        regularizer=tag,
        w_sorted=as_readonly(w_arr),
    )
    return values, ctx


_PROJ_ARGS = ("z", "w")


def _check_u(ctx: ProjectionContext, u, argument: str) -> np.ndarray:
    if argument not in _PROJ_ARGS:
        raise ValueError(f"argument must be 'z' or 'w', got {argument!r}")
    u_arr = np.asarray(u, dtype=np.float64)
    if u_arr.ndim != 1 or u_arr.shape[0] != ctx.n:
        raise ValueError(
            f"u must be a vector of length {ctx.n}, got shape {u_arr.shape}"
        )
    return u_arr


def jvp_projection(ctx: ProjectionContext, u, argument: str = "z") -> np.ndarray:
    """Directional derivative of the projection along u, in O(n).

    argument "z": (I - dv/ds) conjugated by the sorting permutation:
    u minus the isotonic jvp of the permuted direction, permuted back.
    argument "w": the isotonic w-jvp with rows permuted back (w's index space
    is already the sorted one).
    """
    u_arr = _check_u(ctx, u, argument)
    fwd, inv = ctx.sigma.forward, ctx.sigma.inverse
    if argument == "z":
        return u_arr - jvp_isotonic(ctx.solution, u_arr[fwd], "s")[inv]
    return -jvp_isotonic(ctx.solution, u_arr, "w")[inv]


def vjp_projection(ctx: ProjectionContext, u, argument: str = "z") -> np.ndarray:
    """Transposed Jacobian product of the projection, in O(n).

    argument "z": output in z's index space. argument "w": output in the
    sorted-w index space (w is consumed sorted, so its cotangent stays there).
    """
    u_arr = _check_u(ctx, u, argument)
    fwd = ctx.sigma.forward
    if argument == "z":
        inv = ctx.sigma.inverse
        return u_arr - vjp_isotonic(ctx.solution, u_arr[fwd], "s")[inv]
    return -vjp_isotonic(ctx.solution, u_arr[fwd], "w")


def _check_threshold_inputs(s, w) -> tuple[np.ndarray, np.ndarray]:
    s_arr = as_vector(s, "s")
    w_arr = as_vector(w, "w")
    check_same_length(s_arr, w_arr, "s", "w")
    _check_sorted_desc(s_arr, "s")
    _check_sorted_desc(w_arr, "w")
    if w_arr.shape[0] > 1 and np.any(np.diff(w_arr) == 0):
        raise ValueError("w must be strictly decreasing (ties make the threshold undefined)")
    return s_arr, w_arr


def epsilon_min(s, w) -> float:
    """Largest eps at which projecting z/eps still returns an exact vertex.

    For eps <= epsilon_min(sorted z, w), the projection of z/eps onto P(w) is
    w permuted by the inverse argsort of z. Requires s and w sorted
    non-increasing and w strictly decreasing (ties raise). Returns +inf for
    n = 1.
    """
    s_arr, w_arr = _check_threshold_inputs(s, w)
    if s_arr.shape[0] == 1:
        return float("inf")
    ratios = (s_arr[:-1] - s_arr[1:]) / (w_arr[:-1] - w_arr[1:])
    return float(np.min(ratios))


def epsilon_max(s, w) -> float:
    """Smallest eps beyond which the projection of z/eps is fully pooled.

    For eps > epsilon_max(sorted z, w), the projection collapses to the
    closed forms of limit_projection's large regime. Returns 0 for n = 1
    (the vacuous max). The pairwise maximum over i < j of
    (s_i - s_j)/(w_i - w_j) is attained at an adjacent pair (every pairwise
    ratio is a weighted mean of the adjacent ratios it spans), so this scans
    adjacent pairs in O(n).
    """
    s_arr, w_arr = _check_threshold_inputs(s, w)
    if s_arr.shape[0] == 1:
        return 0.0
    ratios = (s_arr[:-1] - s_arr[1:]) / (w_arr[:-1] - w_arr[1:])
    return float(np.max(ratios))


def _logsumexp(x: np.ndarray) -> float:
    peak = float(np.max(x))
    return peak + float(np.log(np.sum(np.exp(x - peak))))


def limit_projection(z, w, eps: float, regularizer: str = "q", regime: str = "small") -> np.ndarray:
    """Closed-form projection of z/eps onto P(w) in the limit regimes.

    regime "small" (eps <= epsilon_min of (sorted z, w)): the result is the
    vertex w permuted by the inverse argsort of z. regime "large"
    (eps > epsilon_max): quadratic gives z/eps recentered to mean(w); entropic
    gives z/eps - LSE(z/eps) + LSE(w). The regime precondition is checked and
    violations raise. No solver call is made.
    """
    tag = canonical_regularizer(regularizer)
    if regime not in ("small", "large"):
        raise ValueError(f"regime must be 'small' or 'large', got {regime!r}")
    eps = float(eps)
    if not (eps > 0 and np.isfinite(eps)):
        raise ValueError("eps must be strictly positive and finite")
    z_arr = as_vector(z, "z")
    w_arr = as_vector(w, "w")
    check_same_length(z_arr, w_arr, "z", "w")
    _check_sorted_desc(w_arr, "w")

    fwd = _descending_argsort(z_arr)
    s = z_arr[fwd]

    if regime == "small":
        if eps > epsilon_min(s, w_arr):
            raise ValueError("small regime requires eps <= epsilon_min(sorted z, w)")
        inv = np.empty_like(fwd)
        inv[fwd] = np.arange(fwd.shape[0], dtype=fwd.dtype)
        return w_arr[inv]

    if eps <= epsilon_max(s, w_arr):
        raise ValueError("large regime requires eps > epsilon_max(sorted z, w)")
    scaled = z_arr / eps
    if tag == "q":
        return scaled - (np.mean(scaled) - np.mean(w_arr))
    return scaled - _logsumexp(scaled) + _logsumexp(w_arr)
