import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL summary line; all lines are printed at the end of the session."""

    def record(number: int, passed: bool, text: str, seconds: float):
        mark = "PASS" if passed else "FAIL"
        line = f"{mark} criterion {number:2d}: {text} [{seconds:.1f} s]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
