import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scarlab.spectral import solve_pxp  # noqa: E402


@lru_cache(maxsize=None)
def _solved(n):
    return solve_pxp(n)


@pytest.fixture(scope="session")
def pxp():
    """pxp(N) -> (sector, spectrum, observable), computed once per session."""
    return _solved


# ----------------------------------------------------- acceptance summary
# test_acceptance.py registers each criterion here; the terminal summary
# prints one PASS/FAIL line per criterion with the measured numbers.

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    entry = ACCEPTANCE.setdefault(report.nodeid, {"outcome": "passed"})
    if report.failed:
        entry["outcome"] = "failed"
    elif report.skipped and report.when == "setup":
        entry["outcome"] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    from test_acceptance import CRITERIA, MEASURED

    rows = []
    for nodeid, entry in ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        if name in CRITERIA:
            rows.append((CRITERIA[name][0], name, entry["outcome"]))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, outcome in sorted(rows):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        detail = MEASURED.get(name, "")
        terminalreporter.write_line(f"criterion {num:2d} {status}: {CRITERIA[name][1]}"
                                    + (f" | {detail}" if detail else ""))
