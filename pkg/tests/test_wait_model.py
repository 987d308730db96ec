"""WAIT-model consistency, composition and verdicts."""

from __future__ import annotations

import pytest

from conftest import CORPUS, corpus_test, lit
from rdmacheck import wait_model
from rdmacheck.exec_enum import brute_force_outcomes, enumerate_candidates
from rdmacheck.litmus import parse_litmus, unfold


def as_wait(name: str) -> str:
    """A tso corpus test rewritten into the wait dialect (no polls involved)."""
    text = (CORPUS / f"{name}.lit").read_text()
    return text.replace("model tso-decl\n", "").replace("dialect tso", "dialect wait")


def observed(test, expr: str) -> str:
    v = wait_model.verdict(test)
    return next(a.observed for a in v.assertions if a.expr == expr)


@pytest.mark.parametrize("name,expr,expected", [
    ("fig2a", "z == 1", "forbidden"),
    ("fig2b", "z == 1", "forbidden"),
    ("wait_sb", "a == 0 && b == 0", "allowed"),
    ("fig3a", "a == 1 && b == 0", "forbidden"),
    ("fig3b", "a == 1 && b == 0 && c == 1", "allowed"),
])
def test_corpus_verdicts(name, expr, expected):
    assert observed(corpus_test(name), expr) == expected


@pytest.mark.parametrize("name,expr,expected", [
    ("rcas_atomicity_a", "x == 2", "allowed"),
    ("rcas_atomicity_b", "x == 2", "allowed"),
    ("rcas_reordering_a", "a == 1 && b == 1", "allowed"),
    ("rcas_reordering_b", "a == 1 && b == 1", "forbidden"),
])
def test_remote_rmw_figures_in_wait_dialect(name, expr, expected):
    assert observed(parse_litmus(as_wait(name)), expr) == expected


def test_rcas_against_rfaa_in_wait_dialect():
    t = lit("""
        test rac
        nodes 3
        loc a@1 = 0
        loc b@2 = 0
        loc x@3 = 0
        thread t1@1 { Rcas(a, x, 0, 2, d) }
        thread t2@2 { Rfaa(b, x, 1, e) }
        assert forbidden x == 2
    """)
    assert observed(t, "x == 2") == "forbidden"


def test_wait_sb_via_rfaa():
    t = lit("""
        test rrc
        nodes 2
        loc y@1 = 0
        loc u@1 = 0
        loc x@2 = 0
        loc v@2 = 0
        thread t1@1 { Rfaa(u, x, 1, d); Wait(d); a := y }
        thread t2@2 { Rfaa(v, y, 1, e); Wait(e); b := x }
        assert allowed a == 0 && b == 0
    """)
    assert observed(t, "a == 0 && b == 0") == "allowed"


def test_single_library_composition_is_that_library():
    t = corpus_test("fig2a")
    for p in unfold(t):
        for c in enumerate_candidates(t, p, "wait"):
            assert wait_model.check_composed(c, ["wait"]) == wait_model.check_wait(c)


def test_composed_rejects_unlisted_library():
    t = corpus_test("fig3a")
    c = next(c for p in unfold(t) for c in enumerate_candidates(t, p, "wait"))
    with pytest.raises(ValueError):
        wait_model.check_composed(c, ["wait"])


@pytest.mark.parametrize("name", ["fig2a", "fig2b", "wait_sb", "fig3a", "nkl1", "fig12a"])
def test_search_matches_oracle_on_corpus(name):
    t = corpus_test(name)
    assert brute_force_outcomes(t, "wait", wait_model.check_composed) == wait_model.search(t).outcomes


def test_removing_an_assertion_keeps_outcomes():
    t = corpus_test("fig2a")
    full = wait_model.verdict(t).outcome_set()
    from dataclasses import replace

    assert wait_model.verdict(replace(t, assertions=t.assertions[:1])).outcome_set() == full


def test_witnesses_recheck():
    for name in ("wait_sb", "fig3b", "fig5b", "fig12d"):
        v = wait_model.verdict(corpus_test(name))
        assert v.witnesses
        for w in v.witnesses.values():
            assert wait_model.check_composed(w)


def test_candidate_cap_is_reported():
    from rdmacheck.engine import ResourceLimit

    with pytest.raises(ResourceLimit):
        wait_model.verdict(corpus_test("fig3b"), max_candidates=3)
