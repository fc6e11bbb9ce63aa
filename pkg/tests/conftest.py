import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from transinfo.fixtures import random_chain, two_state

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines emitted by the acceptance suite, printed once at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def chain2():
    return two_state()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain5():
    return random_chain(5, 7)
