import numpy as np
import pytest

from resumable_teleport.gates import ChannelSpec

ACCEPTANCE_LINES: list[str] = []

B_QUTRIT = np.array([1 / np.sqrt(6), 1 / np.sqrt(3), 1 / np.sqrt(2)])


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture
def qutrit_channel():
    return ChannelSpec(3, B_QUTRIT)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
