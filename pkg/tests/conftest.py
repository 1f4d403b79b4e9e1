"""Shared fixtures: seeded generators and random positive definite matrices."""

import numpy as np
import pytest

from app.core.cone import ConeElement, random_pd
from app.core.specfun import ConeSpec

# Scale matrix used for the two-dimensional real examples.
XI_EXAMPLE = np.array([[3.583614, 2.408764], [2.408764, 4.671542]])

# A Monte Carlo mean farther than this many standard errors from its target fails.
Z_TOL = 3.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_pd(rng):
    """Factory for G G* + 1e-3 I with standard normal G."""

    def factory(d: int, r: int) -> ConeElement:
        return random_pd(ConeSpec(d=d, r=r), rng)

    return factory


@pytest.fixture
def real2():
    return ConeSpec(d=1, r=2)


@pytest.fixture
def xi_example():
    return ConeElement(XI_EXAMPLE)
