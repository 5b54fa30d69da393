import pytest

import perevo


@pytest.fixture(scope="session")
def heat_small():
    return perevo.builtin_scenario("heat_baseline", n=32, M=64)


@pytest.fixture(scope="session")
def heat_unit():
    return perevo.builtin_scenario("heat_baseline", x_lo=0.0, x_hi=1.0, n=24, M=48)


@pytest.fixture(scope="session")
def du_peng_small():
    return perevo.builtin_scenario("du_peng", n=32, M=64)
