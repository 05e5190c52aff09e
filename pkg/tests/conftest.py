import numpy as np
import pytest

from bolzalab import census as cen


@pytest.fixture(scope="session")
def census8():
    return cen.enumerate(L=8.0)


@pytest.fixture(scope="session")
def census5():
    return cen.enumerate(L=5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
