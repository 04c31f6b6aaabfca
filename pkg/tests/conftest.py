import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from judrs.core_model import SystemParams  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return SystemParams.defaults()


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
