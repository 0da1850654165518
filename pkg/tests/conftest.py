"""Collects the acceptance-criterion verdict lines and prints them after the
run, where pytest's capture cannot swallow them."""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.write_line("")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
