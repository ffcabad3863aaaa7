import sys
from pathlib import Path

import pytest

from hiercut import cut_clustering

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(autouse=True)
def verify_inner_bound(monkeypatch):
    """Every probe in the test run also brute-forces the inner bicriterion
    bound on clusters of up to 12 vertices."""
    monkeypatch.setattr(cut_clustering, "VERIFY_INNER_BOUND", 12)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
