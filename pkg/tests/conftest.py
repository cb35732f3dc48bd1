"""Collects the acceptance verdicts and prints one line per criterion at the end of the run."""

import pytest

_RESULTS = {}


@pytest.fixture
def acceptance_record():
    def record(number, title, passed, detail=""):
        _RESULTS[number] = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])
