from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
