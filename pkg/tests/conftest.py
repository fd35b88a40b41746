import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Collect a PASS/FAIL line for the end-of-run summary."""

    def record(number, ok, text):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
