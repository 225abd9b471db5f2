"""Brute-force reference solvers used only by the test suite.

Everything here is deliberately slow and independent: no code is shared with
the production solvers, so an agreement between the two is meaningful
evidence. Size guards keep the exponential enumerations honest.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from ._validate import as_vector, canonical_regularizer, check_same_length

__all__ = [
    "OracleReport",
    "build_report",
    "digest_vector",
    "isotonic_bruteforce",
    "isotonic_minimax_quadratic",
    "projection_bruteforce_q",
    "lp_bruteforce",
    "finite_difference_jacobian",
    "partition_stable",
]

_FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class OracleReport:
    """Summary of an oracle-versus-implementation comparison run.

    failures is empty exactly when every instance's absolute and relative
    errors are within the tolerance the report was built with.
    """

    max_abs_error: float
    max_rel_error: float
    instances: int
    failures: tuple


def build_report(records, tolerance: float) -> OracleReport:
    """Fold per-instance (digest, abs_error, rel_error) triples into a report."""
    records = list(records)
    failures = []
    for digest, abs_err, rel_err in records:
        worst = max(abs_err, rel_err)
        if worst > tolerance:
            failures.append((digest, worst))
    return OracleReport(
        max_abs_error=max((r[1] for r in records), default=0.0),
        max_rel_error=max((r[2] for r in records), default=0.0),
        instances=len(records),
        failures=tuple(failures),
    )


def digest_vector(x) -> str:
    """Short stable identifier for a test input, for failure bookkeeping."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    return f"n={arr.size}:{hashlib.sha1(arr.tobytes()).hexdigest()[:10]}"


def _block_gamma(s, w, lo, hi, regularizer):
    # optimal constant for one block [lo, hi)
    if regularizer == "q":
        return float(np.mean(s[lo:hi] - w[lo:hi]))
    return float(np.logaddexp.reduce(s[lo:hi]) - np.logaddexp.reduce(w[lo:hi]))


def _objective(s, w, v, regularizer):
    if regularizer == "q":
        r = v - (s - w)
        return 0.5 * float(np.dot(r, r))
    return float(np.sum(np.exp(s - v)) + np.sum(np.exp(w) * v))


def isotonic_bruteforce(s, w, regularizer: str = "q") -> np.ndarray:
    """Exhaustive reference for the order-constrained blockwise problem.

    Enumerates every partition of 1..n into contiguous blocks (2^(n-1) of
    them), sets each block to its unconstrained optimum, keeps the candidates
    whose block values are non-increasing, and returns the one with the
    smallest objective. The true solution is blockwise constant with exactly
    these per-block optima, so it is always among the candidates.

    A small slack (1e-9) is applied to the feasibility comparison so that
    partitions tied up to rounding are not spuriously rejected.
    """
    s_arr = as_vector(s, "s")
    w_arr = as_vector(w, "w")
    check_same_length(s_arr, w_arr, "s", "w")
    reg = canonical_regularizer(regularizer)
    n = s_arr.shape[0]
    if n > 12:
        raise ValueError(f"bruteforce search is limited to n <= 12, got n = {n}")

    best_v = None
    best_obj = np.inf
    for mask in range(1 << (n - 1)):
        # bit i set -> cut between positions i and i+1
        starts = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1]
        bounds = starts + [n]
        gammas = [
            _block_gamma(s_arr, w_arr, bounds[b], bounds[b + 1], reg)
            for b in range(len(starts))
        ]
        if any(
            gammas[b + 1] > gammas[b] + _FEASIBILITY_SLACK
            for b in range(len(gammas) - 1)
        ):
            continue
        v = np.empty(n)
        for b in range(len(starts)):
            v[bounds[b]:bounds[b + 1]] = gammas[b]
        obj = _objective(s_arr, w_arr, v, reg)
        if obj < best_obj:
            best_obj = obj
            best_v = v
    return best_v


def isotonic_minimax_quadratic(s, w) -> np.ndarray:
    """Closed-form cross-check for the quadratic case.

    v_i = min over j <= i of (max over k >= i of mean((s - w)[j..k])),
    the minimax characterization of the non-increasing least-squares fit.
    Cubic time; an oracle for the oracle.
    """
    s_arr = as_vector(s, "s")
    w_arr = as_vector(w, "w")
    check_same_length(s_arr, w_arr, "s", "w")
    d = s_arr - w_arr
    n = d.shape[0]
    prefix = np.concatenate([[0.0], np.cumsum(d)])

    def window_mean(j, k):
        return (prefix[k + 1] - prefix[j]) / (k + 1 - j)

    v = np.empty(n)
    for i in range(n):
        v[i] = min(
            max(window_mean(j, k) for k in range(i, n)) for j in range(i + 1)
        )
    return v


def _permutahedron_vertex_toward(direction, w_desc):
    # argmax over vertices of <direction, y>: largest w on largest coordinate
    n = direction.shape[0]
    order = np.argsort(-direction, kind="stable")
    y = np.empty(n)
    y[order] = w_desc
    return y


def projection_bruteforce_q(z, w, max_iterations: int = 100_000) -> np.ndarray:
    """Euclidean projection onto the convex hull of the orderings of w.

    Frank-Wolfe with away steps and exact line search. The linear subproblem
    over the hull is solved by sorting (put the largest w entry on the largest
    gradient coordinate). Away steps give linear convergence for this strongly
    convex objective, so the duality-gap stop of 1e-10 bounds the iterate
    error by sqrt(2e-10) ~ 1.4e-5. The iterate is a tracked convex
    combination of vertices and therefore always feasible, cap or no cap.
    """
    z_arr = as_vector(z, "z")
    w_arr = as_vector(w, "w")
    check_same_length(z_arr, w_arr, "z", "w")
    n = z_arr.shape[0]
    if n > 6:
        raise ValueError(f"bruteforce projection is limited to n <= 6, got n = {n}")
    w_desc = np.sort(w_arr)[::-1]

    start = _permutahedron_vertex_toward(z_arr, w_desc)
    active = {tuple(start): 1.0}

    for _ in range(int(max_iterations)):
        # rebuild the iterate from its vertex weights; avoids drift
        total = sum(active.values())
        x = np.zeros(n)
        for vert, alpha in active.items():
            x += (alpha / total) * np.asarray(vert)

        g = x - z_arr
        toward = _permutahedron_vertex_toward(-g, w_desc)
        gap = float(np.dot(g, x - toward))
        if gap <= 1e-10:
            break

        away_key = max(active, key=lambda vert: float(np.dot(g, np.asarray(vert))))
        away = np.asarray(away_key)
        d_toward = toward - x
        d_away = x - away
        alpha_away = active[away_key] / total

        if float(np.dot(-g, d_toward)) >= float(np.dot(-g, d_away)) or alpha_away >= 1.0:
            d = d_toward
            gamma_max = 1.0
            is_away = False
        else:
            d = d_away
            gamma_max = alpha_away / (1.0 - alpha_away)
            is_away = True

        dd = float(np.dot(d, d))
        if dd == 0.0:
            break
        gamma = min(max(float(np.dot(-g, d)) / dd, 0.0), gamma_max)
        if gamma == 0.0:
            break

        if is_away:
            for vert in active:
                active[vert] *= (1.0 + gamma) / total
            active[away_key] -= gamma
        else:
            for vert in active:
                active[vert] *= (1.0 - gamma) / total
            key = tuple(toward)
            active[key] = active.get(key, 0.0) + gamma
        active = {vert: a for vert, a in active.items() if a > 1e-18}

    total = sum(active.values())
    x = np.zeros(n)
    for vert, alpha in active.items():
        x += (alpha / total) * np.asarray(vert)
    return x


def lp_bruteforce(theta, objective: str) -> np.ndarray:
    """Exact argmax over all n! permutations, for the two linear programs
    whose solutions are the hard sort and the hard rank.

    objective "sort": maximize <y, (n, ..., 1)> over reorderings y of theta;
    returns the maximizing vector (theta sorted non-increasing).
    objective "rank": maximize sum theta_i * (n + 1 - pi_i) over permutations
    pi of 1..n; returns pi, the descending 1-based ranks.

    The first strict maximizer in lexicographic enumeration order is kept,
    which reproduces stable (first-occurrence-wins) tie handling whenever
    tied objectives are float-exact, e.g. for integer-valued inputs.
    """
    theta_arr = as_vector(theta, "theta")
    n = theta_arr.shape[0]
    if n > 6:
        raise ValueError(f"bruteforce enumeration is limited to n <= 6, got n = {n}")

    if objective == "sort":
        rho = np.arange(n, 0, -1, dtype=np.float64)
        best, best_obj = None, -np.inf
        for y in itertools.permutations(theta_arr.tolist()):
            obj = sum(yi * ri for yi, ri in zip(y, rho))
            if obj > best_obj:
                best_obj = obj
                best = y
        return np.array(best, dtype=np.float64)
    if objective == "rank":
        best, best_obj = None, -np.inf
        for pi in itertools.permutations(range(1, n + 1)):
            obj = sum(t * (n + 1 - p) for t, p in zip(theta_arr, pi))
            if obj > best_obj:
                best_obj = obj
                best = pi
        return np.array(best, dtype=np.int64)
    raise ValueError(f"objective must be 'sort' or 'rank', got {objective!r}")


def finite_difference_jacobian(function, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function, column by column.

    Combine with partition_stable before trusting the result near a kink:
    central differences straddle the evaluation point, so a fold boundary
    between x - h*e_j and x + h*e_j invalidates column j.
    """
    x_arr = as_vector(x, "x")
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    base = np.atleast_1d(np.asarray(function(x_arr), dtype=np.float64))
    jac = np.empty((base.shape[0], x_arr.shape[0]))
    for j in range(x_arr.shape[0]):
        bump = np.zeros_like(x_arr)
        bump[j] = h
        hi = np.atleast_1d(np.asarray(function(x_arr + bump), dtype=np.float64))
        lo = np.atleast_1d(np.asarray(function(x_arr - bump), dtype=np.float64))
        jac[:, j] = (hi - lo) / (2.0 * h)
    return jac


def partition_stable(signature, x, h: float = 1e-6) -> bool:
    """True when a discrete signature (e.g. the fold pattern of a solve) is
    unchanged by every +/- h coordinate perturbation of x.

    Finite-difference comparisons are only meaningful at such points; callers
    should resample instances where this returns False.
    """
    x_arr = as_vector(x, "x")
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    base = signature(x_arr)
    for j in range(x_arr.shape[0]):
        for sign in (1.0, -1.0):
            bump = np.zeros_like(x_arr)
            bump[j] = sign * h
            if signature(x_arr + bump) != base:
                return False
    return True
