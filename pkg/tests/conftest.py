"""Shared pytest hooks.

Tests in test_acceptance.py are the release gate; this reporter prints one
pass/fail line per criterion at the end of the run, whatever else happened.
"""
import pytest

_acceptance: dict[str, bool] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance.py" in item.nodeid:
        _acceptance[item.name] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status = "PASS" if _acceptance[name] else "FAIL"
        terminalreporter.write_line(f"{name}: {status}")
