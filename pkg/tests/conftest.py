import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from clipsgd.rng import make_rng

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return make_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def assert_close(a, b, atol=0.0, rtol=0.0):
    np.testing.assert_allclose(a, b, atol=atol, rtol=rtol)
