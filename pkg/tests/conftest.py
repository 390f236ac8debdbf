import time

import pytest

SUITE_BUDGET_S = 600.0
_lines: list[str] = []
_start = [time.perf_counter()]


def pytest_sessionstart(session):
    _start[0] = time.perf_counter()


@pytest.fixture(scope="session")
def criterion():
    """``criterion(label, ok, detail)`` records one pass/fail line and prints it."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        _lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _start[0]
    if not _lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _lines:
        terminalreporter.write_line(line)
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(f"criterion 10 suite runtime: {'PASS' if ok else 'FAIL'} "
                                f"({elapsed:.0f} s, budget {SUITE_BUDGET_S:.0f} s)")
