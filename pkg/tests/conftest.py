import numpy as np
import pytest

from sav_bottleneck.core.params import ModelParams
from sav_bottleneck.services.oracle_suite import BASE_PARAMS, PARADOX_PARAMS

LARGE_PARAMS = ModelParams(
    n_total=10000.0,
    mu=1.0,
    kappa=0.4,
    theta=0.5,
    beta=0.3,
    gamma=2.0,
    t_f=2.0,
    f_n=10000.0,
    f_a=0.0,
    m=10500.0,
)


@pytest.fixture
def base() -> ModelParams:
    return BASE_PARAMS


@pytest.fixture
def base_eta_two_thirds(base) -> ModelParams:
    # kappa = 0.8 gives eta = 0.2 / 0.3
    return base.with_updates(kappa=0.8)


@pytest.fixture
def base_eta_low(base) -> ModelParams:
    # kappa = 0.91 gives eta = 0.3
    return base.with_updates(kappa=0.91)


@pytest.fixture
def paradox_case() -> ModelParams:
    return PARADOX_PARAMS


@pytest.fixture
def large() -> ModelParams:
    return LARGE_PARAMS


@pytest.fixture
def low_eta(large) -> ModelParams:
    return large.with_updates(kappa=0.925, m=10197.0, f_a=1_000_000.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
