"""Shared pytest plumbing for the acceptance gate.

Each acceptance test wraps its checks in the `criterion` context manager,
which records exactly one PASS/FAIL verdict line; the terminal-summary hook
prints the collected lines so they are visible even with output capture on.
"""

import contextlib

import pytest

verdict_lines: list[str] = []


class CriterionChecks:
    def __init__(self):
        self.failures: list[str] = []

    def check(self, label: str, ok) -> None:
        if not ok:
            self.failures.append(label)


@pytest.fixture
def criterion():
    @contextlib.contextmanager
    def open_criterion(num: int, title: str):
        checks = CriterionChecks()
        try:
            yield checks
        except BaseException as exc:
            verdict_lines.append(f"criterion {num} FAIL: {title} (errored: {exc})")
            raise
        if checks.failures:
            detail = "; ".join(checks.failures)
            verdict_lines.append(f"criterion {num} FAIL: {title} [{detail}]")
            pytest.fail(f"criterion {num}: {detail}")
        verdict_lines.append(f"criterion {num} PASS: {title}")

    return open_criterion


def pytest_terminal_summary(terminalreporter):
    if not verdict_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in verdict_lines:
        terminalreporter.write_line(line)
