import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def record(number, title, ok, measured, tolerance):
        line = (f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}  "
                f"measured {measured}  tolerance {tolerance}")
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
