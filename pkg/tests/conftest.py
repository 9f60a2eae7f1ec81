from __future__ import annotations

import pytest

from li_patrol.gridmap import default_map


@pytest.fixture(scope="session")
def office_map():
    return default_map()


_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(label, passed, detail)``."""

    def record(label: str, passed: bool, detail: str = "") -> bool:
        _CRITERIA.append((label, bool(passed), detail))
        print(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
