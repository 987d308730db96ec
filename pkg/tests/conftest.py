"""Shared fixtures; also prints the acceptance report at the end of the run."""

from __future__ import annotations

from pathlib import Path

import pytest

from rdmacheck.litmus import LitmusTest, load_litmus, parse_litmus

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"

# Filled by tests/test_acceptance.py: one CriterionResult per criterion.
ACCEPTANCE_REPORT: list = []


def corpus_test(name: str) -> LitmusTest:
    return load_litmus(CORPUS / f"{name}.lit")


def corpus_names(dialect: str | None = None) -> list[str]:
    names = sorted(p.stem for p in CORPUS.glob("*.lit"))
    if dialect is None:
        return names
    return [n for n in names if corpus_test(n).dialect == dialect]


def lit(text: str) -> LitmusTest:
    """Parse an inline test; the text is dedented first."""
    import textwrap

    return parse_litmus(textwrap.dedent(text).lstrip())


@pytest.fixture
def corpus():
    return corpus_test


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for res in sorted(ACCEPTANCE_REPORT, key=lambda r: _order(r.number)):
        status = "PASS" if res.passed else "FAIL"
        terminalreporter.write_line(f"criterion {res.number:>3}: {status}  {res.title}")


def _order(number: str) -> tuple:
    digits = "".join(c for c in number if c.isdigit())
    return int(digits), number
