from __future__ import annotations

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Collect one acceptance verdict line for the end-of-run summary."""
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter) -> None:
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
