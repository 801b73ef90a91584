"""Acceptance registry: each acceptance test records one verdict line.

The lines are printed as the test runs (visible with ``-s``) and collected
again in the terminal summary, so ``pytest -v`` output always ends with the
full per-criterion table.
"""

from dataclasses import dataclass

import pytest


@dataclass
class Verdict:
    key: str
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.key}: {self.title} -- {self.detail}"


_VERDICTS: list = []


class AcceptanceRecorder:
    def record(self, key: str, title: str, passed: bool, detail: str) -> bool:
        v = Verdict(key, title, bool(passed), detail)
        _VERDICTS.append(v)
        print(v.line())
        return v.passed


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for v in sorted(_VERDICTS, key=lambda v: v.key):
        terminalreporter.write_line(v.line())
