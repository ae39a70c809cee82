from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
QASM_DIR = FIXTURES / "qasm"
LARGE_DIR = FIXTURES / "large"

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def qasm_dir() -> Path:
    return QASM_DIR


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
