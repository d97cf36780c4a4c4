"""Shared test harness pieces.

The acceptance module registers one summary line per criterion here;
the hook replays them at the end of the run so the verdicts stay
visible in captured output.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
