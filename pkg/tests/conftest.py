import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _CRITERIA[number] = {"title": title, "nodeid": item.nodeid, "outcome": "not run", "detail": ""}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _CRITERIA[mark.args[0]]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["outcome"] = "PASS" if rep.passed else "FAIL"
        if rep.failed and call.excinfo is not None:
            entry["detail"] = str(call.excinfo.value).strip().splitlines()[0][:160]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        line = f"criterion {number:>2}: {e['outcome']:<4}  {e['title']}"
        if e["detail"]:
            line += f"  [{e['detail']}]"
        tr.write_line(line)
    passed = sum(e["outcome"] == "PASS" for e in _CRITERIA.values())
    skipped = sum(e["outcome"] == "not run" for e in _CRITERIA.values())
    tail = f" ({skipped} not run)" if skipped else ""
    tr.write_line(f"{passed} of {len(_CRITERIA)} criteria passed{tail}")
