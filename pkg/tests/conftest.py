import os

import numpy as np
import pytest

# scan K -> tr(rho Pi) for monotonicity on every D_s call made by the suite
os.environ.setdefault("RESCODE_CHECK_MONOTONE", "1")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
