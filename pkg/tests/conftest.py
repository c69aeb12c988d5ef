import pytest

_results: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; printed now and again in the run summary."""
    def emit(number: int, ok: bool | None, detail: str):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number}: {status} - {detail}"
        print(line)
        _results.append(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_results, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
