import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.passed and not hasattr(rep, "wasxfail"):
        status = "PASS"
    elif hasattr(rep, "wasxfail") and rep.skipped:
        status = "FAIL (known, expected failure)"
    else:
        status = "FAIL"
    _RESULTS[number] = (title, status, rep.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, status, duration, detail = _RESULTS[number]
        line = f"criterion {number:>2} [{status}] {title} ({duration:.2f}s)"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
