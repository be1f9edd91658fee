import json
from pathlib import Path

import pytest

FROZEN_PATH = Path(__file__).with_name("frozen_constants.json")


@pytest.fixture(scope="session")
def frozen():
    """High-precision reference values written by scripts/freeze_constants.py."""
    return json.loads(FROZEN_PATH.read_text())


def parse_point(key):
    """'2+1i@4' -> (2+1j, 4.0)."""
    zs, phi = key.split("@")
    x, y = zs[:-1].split("+")
    return complex(float(x), float(y)), float(phi)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, printed after the run."""
    def record(number, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
