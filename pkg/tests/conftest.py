"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_outcomes: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, title = mark.args
    entry = _outcomes.setdefault(num, {"title": title, "passed": True, "notes": []})
    if rep.failed:
        entry["passed"] = False
        entry["notes"].append(f"{item.name} failed")
    elif rep.when == "call":
        entry["notes"].extend(s for name, s in item.user_properties if name == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        e = _outcomes[num]
        status = "PASS" if e["passed"] else "FAIL"
        detail = "; ".join(e["notes"])
        terminalreporter.write_line(f"criterion {num} [{status}] {e['title']}: {detail}")
