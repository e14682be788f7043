import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from epieval.harness import SynthConfig, generate_curve  # noqa: E402


@pytest.fixture
def truth():
    return generate_curve(SynthConfig(season_length=30, peak_week=14, peak_height=4000.0, visits_per_week=50000.0, population=10**6))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
