import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store ``(criterion, passed, detail)`` for the end-of-run acceptance table."""

    def _record(number, title, passed, detail):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"[criterion {number}] {'PASS' if passed else 'FAIL'} {title}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title} -- {detail}")
