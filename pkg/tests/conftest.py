import pytest

from bioseal import bch


@pytest.fixture(scope="session")
def bch15():
    return bch.construct(4, 2)


@pytest.fixture(scope="session")
def bch63():
    return bch.construct(6, 3)
