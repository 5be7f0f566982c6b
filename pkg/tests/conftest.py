import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from _report import LINES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
