import numpy as np
import pytest

# Two-run sign pattern on p=5: run 1 has variable 1 negative and 2..5
# selected, run 2 has variable 2 negative and 1,3,4,5 selected.
TWO_RUN_W = (
    np.array([-1.0, 1.0, 1.0, 1.0, 1.0]),
    np.array([1.0, -1.0, 1.0, 1.0, 1.0]),
)
# At this level each run stops at T = 1 through the ratio branch (4 / (1 + 1) = 2).
TWO_RUN_ALPHA_KN = 0.5


@pytest.fixture
def two_run_w():
    return [w.copy() for w in TWO_RUN_W]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
