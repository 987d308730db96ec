"""Acceptance criteria 1-10, one test per criterion.

Each test prints its criterion line (run with ``-s`` to see the details
inline); the session summary lists one PASS/FAIL line per criterion.
Criterion 7's verdict-preservation half is a known gap: the lock and SC
implementations are strictly stronger than their specifications on fig5b
and fig12e, so that half is marked xfail (strict) instead of being weakened.
"""

from __future__ import annotations

import pytest

from conftest import ACCEPTANCE_REPORT
from rdmacheck import acceptance as A
from rdmacheck.acceptance import CriterionResult


def _record(res: CriterionResult) -> CriterionResult:
    ACCEPTANCE_REPORT.append(res)
    print(res.line())
    return res


@pytest.mark.parametrize("fn", [A.criterion_1, A.criterion_2, A.criterion_3, A.criterion_4, A.criterion_5,
                                A.criterion_6], ids=["c1", "c2", "c3", "c4", "c5", "c6"])
def test_figure_verdicts(fn):
    res = _record(fn())
    assert res.passed, res.line()


@pytest.fixture(scope="module")
def criterion_7():
    parts = A.criterion_7_parts()
    whole = CriterionResult("7", "implementation soundness: inclusion PASS, verdict preservation "
                                 + ("PASS" if parts.preservation.passed else "FAIL (known gap: fig5b, fig12e)"),
                            parts.inclusion.passed and parts.preservation.passed,
                            [parts.inclusion.line(), parts.preservation.line()], parts.inclusion.seconds)
    _record(whole)
    return parts


def test_c7_outcome_inclusion(criterion_7):
    assert criterion_7.inclusion.passed, criterion_7.inclusion.line()


@pytest.mark.xfail(strict=True, reason="implementations are strictly stronger than the specs on fig5b and "
                                       "fig12e; see the decisions ledger")
def test_c7_verdict_preservation(criterion_7):
    assert criterion_7.preservation.passed, criterion_7.preservation.line()


def test_c7_known_gap_is_exactly_fig5b_and_fig12e(criterion_7):
    lost = {line.split()[1] for line in criterion_7.preservation.details if line.startswith("BAD")}
    assert lost == {"fig5b", "fig12e"}


def test_c8_translation_inclusion():
    res = _record(A.criterion_8())
    assert res.passed, res.line()


def test_c9_operational_equals_declarative():
    res = _record(A.criterion_9())
    assert res.passed, res.line()


@pytest.fixture(scope="module")
def criterion_10():
    parts = A.criterion_10()
    _record(CriterionResult("10", "property suites (" + ", ".join(
        f"{p.number} {'PASS' if p.passed else 'FAIL'}" for p in parts) + ")",
        all(p.passed for p in parts), [p.line() for p in parts], sum(p.seconds for p in parts)))
    return {p.number: p for p in parts}


@pytest.mark.parametrize("part", ["10a", "10b", "10c", "10d", "10e"])
def test_c10_property_suites(criterion_10, part):
    assert criterion_10[part].passed, criterion_10[part].line()
