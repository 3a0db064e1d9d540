import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep


@pytest.fixture
def criterion(request):
    """Records one acceptance line: ``criterion(number, title)`` then add details."""
    entry = {"details": []}

    def start(number, title):
        entry.update(number=number, title=title)
        return entry["details"]

    yield start
    if "number" not in entry:
        return
    rep = getattr(request.node, "call_report", None)
    verdict = "PASS" if rep is not None and rep.passed else "FAIL"
    line = f"criterion {entry['number']} {verdict}: {entry['title']}"
    if entry["details"]:
        line += " [" + "; ".join(entry["details"]) + "]"
    _CRITERIA.append((entry["number"], line))
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    if tr is not None:
        tr.write_line("")
        tr.write_line(line)
    else:
        print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
