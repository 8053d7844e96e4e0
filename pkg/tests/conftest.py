import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def unit(v):
    return v / np.linalg.norm(v)


def rel(a, b):
    return np.linalg.norm(a - b, 2) / np.linalg.norm(b, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_spd(rng, n, shift=0.1):
    M = rng.standard_normal((n, n))
    return M @ M.T / n + shift * np.eye(n)


def random_hermitian(rng, n, complex_=False):
    M = rng.standard_normal((n, n))
    if complex_:
        M = M + 1j * rng.standard_normal((n, n))
    return (M + M.conj().T) / 2
