import numpy as np
import pytest
from hypothesis import settings

from helpers import ACCEPTANCE_LINES

# fixed example stream so a run is reproducible
settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
