import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_line(request):
    """Record the one-line outcome of an acceptance criterion."""
    def record(label, ok, detail=""):
        ACCEPTANCE_LINES[label] = (ok, detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
        ok, detail = ACCEPTANCE_LINES[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
