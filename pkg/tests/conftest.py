import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from invspec.core import PI, sample_potential
from invspec.forward import forward_solve
from invspec.roundtrip import example6_data, inverse_pipeline, roundtrip

settings.register_profile(
    "package",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("package")


@pytest.fixture(scope="session")
def q_zero():
    return sample_potential(lambda x: np.zeros_like(x))


@pytest.fixture(scope="session")
def q_cos():
    return sample_potential(np.cos)


@pytest.fixture(scope="session")
def q_parabola():
    return sample_potential(lambda x: x * (PI - x))


@pytest.fixture(scope="session")
def fwd_zero_64(q_zero):
    """q = 0, beta = pi/2, 64 modes: every quantity has a closed form."""
    return forward_solve(q_zero, PI / 2, 64)


@pytest.fixture(scope="session")
def fwd_cos_64(q_cos):
    """q = cos x, beta = pi/3, 64 modes: the workhorse smooth case."""
    return forward_solve(q_cos, PI / 3, 64)


@pytest.fixture(scope="session")
def fwd_parabola_41(q_parabola):
    return forward_solve(q_parabola, PI / 3, 41)


@pytest.fixture(scope="session")
def ex6_inverse():
    """Full inverse pipeline on the bundled closed-form example."""
    return inverse_pipeline(example6_data(40))


@pytest.fixture(scope="session")
def roundtrip_cos(q_cos):
    """Round trips for q = cos at N in {16, 32, 64}, with wall time."""
    out = {}
    t0 = time.time()
    for n in (16, 32, 64):
        report, inv = roundtrip(q_cos, PI / 3, n, trim=(0.1 * PI, 0.95 * PI))
        out[n] = (report, inv)
    out["elapsed_s"] = time.time() - t0
    return out
