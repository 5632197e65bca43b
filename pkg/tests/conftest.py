import pytest

from chemosched.instance import micro1

# one line per acceptance criterion, printed after the run
CRITERIA_LINES: list[str] = []


@pytest.fixture
def m1():
    return micro1()


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
