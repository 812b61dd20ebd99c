"""Per-criterion pass/fail summary for the acceptance tests.

Tests tagged ``@pytest.mark.criterion(number, title)`` are grouped by number;
a criterion passes only if every test in its group passed.  Tests may attach a
``detail`` via ``record_property`` to show measured values.
"""
from collections import defaultdict

import pytest

_results = defaultdict(list)
_titles = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        _titles[number] = title
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _results[number].append((item.name, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        checks = _results[number]
        ok = all(status == "PASS" for _, status, _ in checks)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {_titles[number]}")
        for name, status, detail in checks:
            tr.write_line(f"    {status:<4} {name}" + (f"  [{detail}]" if detail else ""))
