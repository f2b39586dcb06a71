import pytest

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["parts"].append((item.name, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = bool(entry["parts"]) and all(p for _, p in entry["parts"])
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {entry['title']}"
        if len(entry["parts"]) > 1 and not ok:
            detail = ", ".join(f"{name} {'PASS' if p else 'FAIL'}" for name, p in entry["parts"])
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
