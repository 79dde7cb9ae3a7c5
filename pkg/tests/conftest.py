import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""

    def _record(number, label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {label}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
