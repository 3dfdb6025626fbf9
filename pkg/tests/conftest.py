import pytest

from quadrtop.cli_runner.corpus import corpus
from quadrtop.cli_runner.runner import run_analyze

_CRITERIA: list[str] = []


@pytest.fixture(scope="session")
def corpus_runs():
    """name -> (CorpusEntry, RunReport) for every built-in corpus entry at seed 0."""
    out = {}
    for entry in corpus():
        out[entry.spec.name] = (entry, run_analyze(entry.spec))
    return out


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line; the caller asserts afterwards."""

    def record(label, ok: bool, detail: str = "") -> bool:
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        print(line)
        _CRITERIA.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
