import time

import pytest

_VERDICTS = []


class Criterion:
    """Times one acceptance check and records a one-line verdict."""

    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        ok = exc_type is None and elapsed < self.budget_s
        if exc_type is not None:
            note = str(exc).strip().splitlines()[0] if str(exc).strip() else exc_type.__name__
        elif not ok:
            note = f"over budget ({elapsed:.3f}s >= {self.budget_s}s)"
        else:
            note = self.detail
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.number}: {self.title} ({elapsed:.3f}s)"
        if note:
            line += f" - {note}"
        _VERDICTS.append(line)
        print(line)
        if exc_type is None and not ok:
            pytest.fail(note)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
