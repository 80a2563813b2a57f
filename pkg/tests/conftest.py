import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion reported in the terminal summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    cid, text = marker.args
    measured = dict(item.user_properties).get("measured", "")
    _RESULTS.append((cid, text, report.passed, measured))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, text, passed, measured in sorted(_RESULTS, key=lambda r: [int(c) if c.isdigit() else c for c in r[0]]):
        line = f"{'PASS' if passed else 'FAIL'}  [{cid}] {text}"
        if measured:
            line += f"  ({measured})"
        terminalreporter.write_line(line)
