import pytest

from fiberdyn import maps


@pytest.fixture(scope="session")
def logistic():
    return maps.logistic_map()


@pytest.fixture(scope="session")
def logistic_seq(logistic):
    return maps.constant_sequence(logistic)


@pytest.fixture(scope="session")
def viana():
    return maps.viana_skew()


@pytest.fixture(scope="session")
def twowell():
    return maps.twowell_map()
