from __future__ import annotations

import re

_CRITERIA: dict[int, list] = {}  # number -> [title, outcome]


def pytest_collection_modifyitems(items):
    for item in items:
        match = re.match(r"test_criterion_(\d+)", item.name)
        if match and item.module.__name__.endswith("test_acceptance"):
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _CRITERIA[int(match.group(1))] = [doc, "NOT RUN"]
            item.user_properties.append(("criterion", int(match.group(1))))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.failed:
        entry = _CRITERIA[number]
        if report.failed:
            entry[1] = "FAIL"
        elif report.skipped:
            entry[1] = "SKIP"
        elif entry[1] != "FAIL":
            entry[1] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {outcome:4s}  {title}")
