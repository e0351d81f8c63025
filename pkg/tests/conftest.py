import pytest

from drgfmd.lab import SUITES, run_paper_suite

# pass/fail lines of the acceptance criteria, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def paper_suites(tmp_path_factory):
    """Every reproduction suite at full size (30 trials, T = 1e4), run once."""
    root = tmp_path_factory.mktemp("suites")
    return {s: run_paper_suite(s, root / "first") for s in SUITES}, root
