import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# N=6 users, k=2, four observed topics; every topic is held by exactly three users.
SIX_BY_FOUR = [
    ("t1", "t2"),
    ("t2", "t3"),
    ("t3", "t4"),
    ("t1", "t4"),
    ("t1", "t3"),
    ("t2", "t4"),
]


@pytest.fixture
def six_by_four():
    return list(SIX_BY_FOUR)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("title", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, verdict, title in sorted(lines):
            terminalreporter.write_line(f"criterion {num}: {verdict}  {title}")
