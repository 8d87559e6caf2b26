import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one acceptance line; shown in the terminal summary."""

    def record(num: int, name: str, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE C{num:<2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
