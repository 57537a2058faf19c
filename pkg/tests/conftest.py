"""Collects outcomes of tests marked ``criterion`` and prints one line per criterion."""
import pytest

_results = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry = _results.setdefault(marker[0], {"title": marker[1], "ok": True, "tests": []})
        entry["ok"] &= report.outcome == "passed"
        entry["tests"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"CRITERION {number:>2} {verdict}  {entry['title']}")
