import sys
from pathlib import Path

import pytest

from throttling import UNBOUNDED, ThrottlingGame

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES = []


@pytest.fixture
def twin_game():
    # two symmetric buyers; equilibria form the curve theta1 * theta2 = 1/2
    return ThrottlingGame([[2, 1], [1, 2]], (0.5, 0.5))


@pytest.fixture
def fp_pair_game():
    return ThrottlingGame([[2, 2], [1, 3]], (2, 1))


@pytest.fixture
def sp_triple_game():
    return ThrottlingGame([[2, 2, 0, 1], [0, 1, 4, 4], [1, 0, 2, 0]], (1, 1, UNBOUNDED))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
