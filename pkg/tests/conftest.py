import numpy as np
import pytest

from manipbench.elections import Profile, UtilityProfile


def random_profile(rng: np.random.Generator, m: int, n: int) -> Profile:
    orders = np.argsort(rng.uniform(size=(n, m)), axis=1).astype(np.int8)
    return Profile._from_array(m, orders)


def random_utilities(rng: np.random.Generator, n: int, m: int) -> UtilityProfile:
    return UtilityProfile._from_array(rng.uniform(size=(n, m)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
