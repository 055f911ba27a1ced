import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record a per-criterion verdict, printed in the terminal summary."""

    def record(tag, ok, detail=""):
        _CRITERIA.append((tag, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for tag, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {tag}: {detail}")
