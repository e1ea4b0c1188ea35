from tests._criteria import CRITERION_LINES


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
