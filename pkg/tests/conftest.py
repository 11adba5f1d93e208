import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ruinkit import EXAMPLE_PARAMS, EXAMPLE_SPEC, NegativeWealthMode, ProblemSpec  # noqa: E402
from ruinkit.ruin_at_death import solve_ruin_at_death  # noqa: E402
from ruinkit.shortfall_at_death import solve_U  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def spec():
    return EXAMPLE_SPEC


@pytest.fixture(scope="session")
def phi_sol():
    return solve_ruin_at_death(EXAMPLE_SPEC)


@pytest.fixture(scope="session")
def u_sol():
    return solve_U(EXAMPLE_SPEC)


@pytest.fixture(scope="session")
def borrow_spec():
    return ProblemSpec(EXAMPLE_PARAMS, x=0.0, mode=NegativeWealthMode.BORROW)


@pytest.fixture(scope="session")
def welfare_spec():
    return ProblemSpec(EXAMPLE_PARAMS, x=0.0, mode=NegativeWealthMode.WELFARE)


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
