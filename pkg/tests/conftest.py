import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graphs import T5_LINES, t5  # noqa: E402


@pytest.fixture
def toy():
    return t5()


@pytest.fixture
def t5_file(tmp_path):
    path = tmp_path / "t5.txt"
    path.write_text(T5_LINES)
    return path


_CRITERIA = []


def _status(ok):
    return "SKIP" if ok is None else ("PASS" if ok else "FAIL")


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(label, ok, detail=""):
        """``ok`` None marks a skipped criterion."""
        _CRITERIA.append((label, ok, detail))
        print(f"[{_status(ok)}] {label} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{_status(ok)}  {label}  {detail}")
