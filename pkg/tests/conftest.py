import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=40, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

ORACLES = json.loads((Path(__file__).parent / "fixtures" / "oracles.json").read_text())
ACCEPTANCE_LINES: list[str] = []


def oracle(quantity, **params):
    for row in ORACLES:
        if row["quantity"] == quantity and all(row["params"].get(k) == v for k, v in params.items()):
            return row
    raise KeyError(quantity)


@pytest.fixture
def oracle_row():
    return oracle


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
