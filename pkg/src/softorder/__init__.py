"""Fast differentiable sorting and ranking.

Soft sort and rank operators built from order-constrained blockwise
optimization, with exact linear-time forward passes and exact linear-time
jvp/vjp routines. The `oracle` submodule holds slow brute-force references
for testing and is not re-exported here.
"""

from .isotonic import (
    BlockPartition,
    BlockStats,
    IsotonicSolution,
    jvp_isotonic,
    solve_isotonic_entropic,
    solve_isotonic_quadratic,
    vjp_isotonic,
)
from .projection import (
    Permutation,
    ProjectionContext,
    epsilon_max,
    epsilon_min,
    jvp_projection,
    limit_projection,
    project,
    vjp_projection,
)
from .operators import (
    SoftOpResult,
    argsort,
    batched,
    hard_rank,
    hard_sort,
    jvp_soft,
    soft_rank,
    soft_rank_kl_direct,
    soft_sort,
    vjp_soft,
)
from .losses import (
    TrimSpec,
    lts_demo_fit,
    soft_lts_loss,
    soft_spearman_loss,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "BlockStats",
    "IsotonicSolution",
    "Permutation",
    "ProjectionContext",
    "SoftOpResult",
    "TrimSpec",
    "argsort",
    "batched",
    "epsilon_max",
    "epsilon_min",
    "hard_rank",
    "hard_sort",
    "jvp_isotonic",
    "jvp_projection",
    "jvp_soft",
    "limit_projection",
    "lts_demo_fit",
    "project",
    "soft_lts_loss",
    "soft_rank",
    "soft_rank_kl_direct",
    "soft_sort",
    "soft_spearman_loss",
    "solve_isotonic_entropic",
    "solve_isotonic_quadratic",
    "vjp_isotonic",
    "vjp_projection",
    "vjp_soft",
    "__version__",
]
