import numpy as np
import pytest

from svdalarm.grid import build_h_matrix, default_grid

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid39():
    return default_grid()


@pytest.fixture(scope="session")
def H39(grid39):
    return build_h_matrix(grid39)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def _report(number, passed, detail):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}")
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
