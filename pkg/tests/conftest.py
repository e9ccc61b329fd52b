import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion membership")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    info = getattr(report, "criterion", None)
    if info is None:
        return
    number, title = info
    entry = _CRITERIA.setdefault(number, {"title": title, "failed": [], "count": 0})
    entry["count"] += 1
    if report.outcome != "passed":
        entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number:>2} {verdict}  {entry['title']} ({entry['count']} checks)"
        if entry["failed"]:
            line += "  failing: " + ", ".join(entry["failed"])
        tr.write_line(line)
