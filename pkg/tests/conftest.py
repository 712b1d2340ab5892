from __future__ import annotations

import sys
from pathlib import Path

import pytest

import mdresolve

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(mdresolve.__file__).parent / "data"
BIBSAMPLE = DATA / "bibsample"
SYNTHETIC = DATA / "synthetic"

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")


@pytest.fixture(scope="session")
def bibsample():
    return BIBSAMPLE


@pytest.fixture(scope="session")
def synthetic():
    return SYNTHETIC
