import numpy as np
import pytest

from fuzzysel.dataset import generate_synthetic1, generate_synthetic2, generate_synthetic3

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def syn1():
    return generate_synthetic1(0)


@pytest.fixture(scope="session")
def syn2():
    return generate_synthetic2(0)


@pytest.fixture(scope="session")
def syn3():
    return generate_synthetic3(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
