"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_AC_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "ac(label): acceptance criterion test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("ac")
    if marker is None or report.when != "call":
        return
    detail = dict(report.user_properties).get("detail", "")
    _AC_RESULTS[marker.args[0]] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_AC_RESULTS, key=lambda s: int(s.split("-")[1])):
        status, detail = _AC_RESULTS[label]
        terminalreporter.write_line(f"{label} {status}: {detail}")
