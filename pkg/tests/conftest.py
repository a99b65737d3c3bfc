import pytest

from dampwave._accel import HAVE_NUMBA, use_backend
from dampwave.data import DataProfile
from dampwave.exponents import ProblemParams


@pytest.fixture(params=["numba", "numpy"] if HAVE_NUMBA else ["numpy"])
def backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def bump():
    return DataProfile()


@pytest.fixture
def p2():
    return ProblemParams(p=2.0, eps=1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
