"""Shared pytest wiring.

The acceptance tests record one human-readable pass/fail line each;
emitting them through the terminal reporter (rather than plain print)
keeps them visible under pytest's default output capture.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
