import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# jit compilation on first call can take seconds; deadlines would flake
settings.register_profile(
    "softorder",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("softorder")


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the jit kernels once so individual tests measure steady state."""
    import softorder

    theta = np.array([0.3, -1.2, 0.8, 0.1])
    for reg in ("q", "e"):
        softorder.soft_sort(theta, 1.0, reg)
        softorder.soft_rank(theta, 1.0, reg)
    softorder.soft_rank_kl_direct(theta, 1.0)
