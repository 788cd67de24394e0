import numpy as np
import pytest

from pilothash import BuildConfig, build, gen_keys


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # first call pays the JIT cost; keep it out of individual tests
    build(gen_keys(500, 99), BuildConfig(lambda_=4.0, partition_size=250.0))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def corpus_small():
    return gen_keys(20_000, 1)
