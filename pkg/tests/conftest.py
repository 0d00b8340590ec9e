import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ma_couple import Grid, SolveConfig  # noqa: E402


@pytest.fixture(scope="session")
def grid2048():
    return Grid(2048)


@pytest.fixture(scope="session")
def cfg2048(grid2048):
    return SolveConfig(grid=grid2048)


@pytest.fixture(autouse=True)
def _default_grid(monkeypatch):
    # keep runs independent of a grid size exported in the caller's shell
    monkeypatch.delenv("MA_COUPLE_GRID", raising=False)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
