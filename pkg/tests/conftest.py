import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floatdual import _backend

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BACKENDS = ["numba", "numpy"] if _backend.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    prev = _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(0x5EED))


def unit(theta):
    return np.array([np.cos(theta), np.sin(theta)])


# one line per acceptance criterion, printed at the end of the run
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
