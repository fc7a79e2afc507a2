import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def entropy_fixture():
    return json.loads((FIXTURES / "zero_temperature_entropy.json").read_text())


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail, elapsed=None):
        timing = "" if elapsed is None else f" [{elapsed:.1f} s]"
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}{timing}"
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
