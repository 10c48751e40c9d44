import json
from pathlib import Path

import pytest

FROZEN = json.loads((Path(__file__).parent / "data" / "frozen.json").read_text())

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
