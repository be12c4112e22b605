"""Collects acceptance-criterion verdicts and prints them after the run."""

VERDICTS = []


def record(number: int, title: str, passed: bool, detail: str = "") -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    VERDICTS.append((number, line))
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(VERDICTS):
        terminalreporter.write_line(line)
