import json
import re
from pathlib import Path

import pytest

ORACLE_PATH = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def oracle():
    """Frozen values from ``oracles/generate_oracles.py`` (independent of the package)."""
    return json.loads(ORACLE_PATH.read_text())


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def log(label, passed, detail):
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line):
    label = line.split()[1].rstrip(":")
    return int(re.match(r"\d+", label).group()), label
