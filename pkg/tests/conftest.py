import pytest

_criterion_lines: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and assert it.

    The lines are replayed in the terminal summary so the acceptance
    verdicts are visible in every run, not only on failures.
    """

    def _check(ok: bool, label: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}"
        _criterion_lines.append(line)
        print(line)
        assert ok, line

    return _check


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
