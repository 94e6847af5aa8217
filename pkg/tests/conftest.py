import numpy as np
import pytest

from capstokes.grid import make_grid

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].lstrip("C"))):
            terminalreporter.write_line(line)


@pytest.fixture
def grid16():
    return make_grid(16.0, 256)


@pytest.fixture
def bump(grid16):
    return 0.3 * np.exp(-grid16.nodes**2)
