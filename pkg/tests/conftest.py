"""Shared pytest plumbing.

Tests may carry a ``criterion(num, title)`` marker (the acceptance gate in
``test_acceptance.py`` does); after the run, the terminal summary prints one
PASS/FAIL line per numbered criterion.
"""

import pytest

_titles: dict[int, str] = {}
_outcomes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, title): part of the numbered acceptance criteria "
        "summarized at the end of the run",
    )


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        num, title = marker.args
        _titles[num] = title
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _outcomes.setdefault(num, []).append(report.outcome)
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_titles):
        outcomes = _outcomes.get(num, [])
        if outcomes and all(out == "passed" for out in outcomes):
            status = "PASS"
        elif any(out == "failed" for out in outcomes):
            status = "FAIL"
        else:
            status = "SKIPPED"
        terminalreporter.write_line(f"criterion {num:2d} {status} - {_titles[num]}")
