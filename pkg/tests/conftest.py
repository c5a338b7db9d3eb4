import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def scalar(*coeffs, g=(0.0,)):
    """Scalar pencil from polynomial coefficients, constant term first."""
    from krein_pencil import PolyPencil
    return PolyPencil(tuple(np.array([[c]]) for c in coeffs), g)
