import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, label = marker.args
        details = [str(v) for k, v in item.user_properties if k == "detail"]
        _CRITERIA[number] = (label, report.outcome, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        label, outcome, detail = _CRITERIA[number]
        tag = "PASS" if outcome == "passed" else "FAIL"
        line = f"{tag}  [{number:2d}] {label}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
