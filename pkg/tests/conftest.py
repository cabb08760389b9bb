from __future__ import annotations

from pathlib import Path

import pytest

CORPORA = Path(__file__).resolve().parent.parent / "corpora"

# criterion number -> (passed, description), filled in by test_acceptance
RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def corpora() -> Path:
    return CORPORA


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, text = marker.args
    RESULTS[number] = (call.excinfo is None, text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, text = RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}")
