import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairkit.data import PROTECTED_NAMES, encode, load_german_credit

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def german_records():
    return load_german_credit()


@pytest.fixture(scope="session")
def german(german_records):
    return {name: encode(german_records, name) for name in PROTECTED_NAMES}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
