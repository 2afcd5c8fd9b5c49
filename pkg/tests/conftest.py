"""Shared fixtures: the deterministic corpus on disk, plus result reporting.

The terminal summary prints one PASS/FAIL line per acceptance test so the
acceptance suite's verdicts are readable at a glance.
"""

from __future__ import annotations

from pathlib import Path

import pytest

import corpus

FIXTURES = Path(__file__).parent / "fixtures"
RESPONSES_TSV = FIXTURES / "asirra_responses.tsv"
TRUTH_TSV = FIXTURES / "asirra_truth.tsv"


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    """All 270 corpus images written out as files, once per session."""
    root = tmp_path_factory.mktemp("corpus")
    for name, data, _, _ in corpus.build_corpus():
        (root / name).write_bytes(data)
    return root


@pytest.fixture()
def responses_path() -> Path:
    return RESPONSES_TSV


@pytest.fixture()
def truth_path() -> Path:
    return TRUTH_TSV


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for state in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(state, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", None) == "call" or state == "error":
                ok = state == "passed" and report.passed
                # a later failure for the same node wins over an earlier pass
                results[nodeid] = results.get(nodeid, True) and ok
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(results):
        verdict = "PASS" if results[nodeid] else "FAIL"
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{verdict}  {name}")
