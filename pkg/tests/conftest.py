"""Shared pytest plumbing: the acceptance-criteria summary block.

Acceptance tests record one line per criterion; the lines are echoed in a
terminal section after the run so they are visible even though pytest
captures stdout of passing tests.
"""

import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(line: str) -> None:
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
