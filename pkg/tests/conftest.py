import re
from importlib import resources

import pytest

from glyphkit import homoglyphs, questions

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One ACCEPTANCE <n>: PASS|FAIL line per acceptance criterion."""
    verdicts: dict[int, str] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if not match:
                continue
            if outcome == "passed" and report.when != "call":
                continue
            number = int(match.group(1))
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if verdicts.get(number) != "FAIL":
                verdicts[number] = verdict
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(verdicts):
            terminalreporter.write_line(f"ACCEPTANCE {number}: {verdicts[number]}")


def _data(name: str) -> bytes:
    return resources.files("glyphkit.data").joinpath(name).read_bytes()


@pytest.fixture(scope="session")
def sample_db_bytes() -> bytes:
    return _data("sample_homoglyphs.txt")


@pytest.fixture(scope="session")
def confusables_bytes() -> bytes:
    return _data("sample_confusables.txt")


@pytest.fixture(scope="session")
def sample_db(sample_db_bytes) -> homoglyphs.HomoglyphDatabase:
    return homoglyphs.parse_homoglyph_file(sample_db_bytes, "group_lines")


@pytest.fixture(scope="session")
def sample_corpus():
    with resources.as_file(
        resources.files("glyphkit.data").joinpath("sample_corpus.jsonl")
    ) as path:
        return questions.load_corpus(path)
