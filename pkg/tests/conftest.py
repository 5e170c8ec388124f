import pytest

from pathsde.coefficients import ModelParams, normalize
from pathsde.gaussian_model import VarianceTable

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cs():
    return normalize(ModelParams())


@pytest.fixture(scope="session")
def vt(cs):
    return VarianceTable(cs)


@pytest.fixture(scope="session")
def cs1():
    return normalize(ModelParams(p=1.0))


@pytest.fixture(scope="session")
def vt1(cs1):
    return VarianceTable(cs1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
