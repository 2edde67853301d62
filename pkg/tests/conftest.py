import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("KAHLERSPEC_EXAMPLES", "25")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def perturbed_field():
    from kahlerspec.fefferman import solve_reinhardt_2d
    from kahlerspec.reinhardt import MeshSpec, ReinhardtDomain

    return solve_reinhardt_2d(ReinhardtDomain.perturbed(0.1), MeshSpec(size=65))


@pytest.fixture(scope="session")
def ball_field():
    from kahlerspec.fefferman import solve_reinhardt_2d
    from kahlerspec.reinhardt import MeshSpec, ReinhardtDomain

    return solve_reinhardt_2d(ReinhardtDomain.ball(2), MeshSpec(size=65))
