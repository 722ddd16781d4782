import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    ok, secs = _RESULTS.get(n, (True, 0.0))
    _RESULTS[n] = (ok and rep.passed, secs + rep.duration)
    _RESULTS.setdefault(("title", n), title)


def pytest_terminal_summary(terminalreporter):
    nums = sorted(k for k in _RESULTS if isinstance(k, int))
    if not nums:
        return
    terminalreporter.section("acceptance criteria")
    for n in nums:
        ok, secs = _RESULTS[n]
        title = _RESULTS[("title", n)]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f} s)")
