"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

import pytest

_CRITERIA = {}   # nodeid -> (number, title)
_OUTCOMES = {}   # number -> (passed, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, _ = _CRITERIA[report.nodeid]
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        _OUTCOMES[number] = (report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    titles = dict(_CRITERIA.values())
    for number in sorted(_OUTCOMES):
        passed, detail = _OUTCOMES[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {titles[number]}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a short measurement string to the acceptance summary line."""
    def add(text):
        request.node.user_properties.append(("detail", text))
    return add
