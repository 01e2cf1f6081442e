import random

import pytest

from apake.group import generate_group, rfc3526_2048
from apake.hashproof import PhfParams
from apake.primitives import Profile


class StubRandom(random.Random):
    """Deterministic stub yielding a fixed sequence from randrange/getrandbits."""

    def __new__(cls, values):
        return super().__new__(cls, 0)

    def __init__(self, values):
        super().__init__(0)
        self._values = list(values)

    def randrange(self, *args):
        return self._values.pop(0)

    def getrandbits(self, k):
        return self._values.pop(0)


@pytest.fixture(scope="session")
def toy_gp():
    # bits=4 admits exactly one safe prime pair: p=23, q=11
    return generate_group(4, b"toy-fixture")


@pytest.fixture(scope="session")
def toy16_gp():
    return generate_group(16, b"toy16-fixture")


@pytest.fixture(scope="session")
def bench_gp():
    return generate_group(48, b"bench-fixture")


@pytest.fixture(scope="session")
def demo_gp():
    return rfc3526_2048(b"demo-fixture")


@pytest.fixture(scope="session")
def toy_pp(toy_gp):
    return PhfParams.create(toy_gp, Profile.toy(), random.Random(101))


@pytest.fixture(scope="session")
def toy16_pp(toy16_gp):
    return PhfParams.create(toy16_gp, Profile.toy(), random.Random(102))


@pytest.fixture(scope="session")
def bench_pp(bench_gp):
    return PhfParams.create(bench_gp, Profile.bench(), random.Random(103))


@pytest.fixture(scope="session")
def demo_pp(demo_gp):
    return PhfParams.create(demo_gp, Profile.demo(), random.Random(104))
