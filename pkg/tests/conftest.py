import numpy as np
import pytest

from dasrate import CellLayout, Position, build_pathloss_matrix

FIG2_USERS = [Position(-2.5, -2.0), Position(3.0, 4.5)]

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def fig2_layout():
    return CellLayout.canonical(2)


@pytest.fixture
def fig2_gains(fig2_layout):
    return build_pathloss_matrix(FIG2_USERS, fig2_layout)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=str):
        ok, line = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {line}")
