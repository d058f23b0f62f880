import numpy as np
import pytest

# verdicts appended by test_acceptance.report; echoed after the test summary
# because capture would otherwise swallow them
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
