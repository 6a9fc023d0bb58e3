import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from symred import lie
from symred.bundle import ConnectionData

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["so3", "u1", "se2"])
def group(request):
    return lie.builtin_group(request.param)


def affine_connection(spec, n, rng, scale=0.4):
    """gamma(x) = c0 + c1 . x with an analytic Jacobian."""
    m = spec.dim_algebra
    c0 = scale * rng.normal(size=(n, m))
    c1 = scale * rng.normal(size=(n, m, n))
    return ConnectionData(spec, n, lambda x: c0 + c1 @ x, lambda x: c1)


def curved_connection(spec, n, rng, scale=0.4):
    """Nonlinear gamma; its Jacobian is left to finite differences."""
    m = spec.dim_algebra
    c0 = scale * rng.normal(size=(n, m))
    c1 = scale * rng.normal(size=(n, m, n))
    return ConnectionData(spec, n, lambda x: c0 + np.sin(c1 @ x))
