import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from effdioph.numtheory import euler_phi_sieve

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def phi_small():
    return euler_phi_sieve(5000)


@pytest.fixture(scope="session")
def phi_1e5():
    return euler_phi_sieve(10 ** 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance verdicts, one line per criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
