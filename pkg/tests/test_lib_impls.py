"""Library implementations (inlining) and the wait-to-tso translation."""

from __future__ import annotations

import pytest

from conftest import CORPUS, corpus_test, lit
from rdmacheck import lib_impls, models, op_sim, wait_model
from rdmacheck.exec_enum import CEvent, lock_well_formed
from rdmacheck.litmus import (
    Bcast, GFence, Get, LitmusError, LockOp, Poll, Put, Rfaa, Rfence, SetAdd, Wait, While, parse_litmus, pretty,
    unfold, walk,
)

INLINED = models.RunConfig(loop_bound=2)


def stmts(test, thread: int = 0) -> list:
    return list(walk(test.threads[thread].body))


def names(test) -> set[str]:
    return test.declared_names()


def _kinds(test, thread=0):
    return [type(s).__name__ for s in stmts(test, thread)]


# -- structure ---------------------------------------------------------------

def test_wlock_inlining_replaces_lock_calls():
    out = lib_impls.inline_wlock(corpus_test("fig5a"))
    assert not any(isinstance(s, LockOp) for t in range(2) for s in stmts(out, t))
    kinds = _kinds(out)
    assert kinds.index("Rfaa") < kinds.index("Wait") < kinds.index("BrlWrite") < kinds.index("Bcast")
    assert out.dialect == "library" and out.model == "wait"


def test_slock_is_wlock_plus_global_fence():
    out = lib_impls.inline_slock(corpus_test("fig8c"), deep=False)
    body = out.threads[0].body
    assert body[0] == LockOp("AcqWL", "l")
    assert isinstance(body[-2], GFence) and body[-2].nodes == (1, 2)
    assert body[-1] == LockOp("RelWL", "l")


def test_nlock_inlining_shape():
    out = lib_impls.inline_nlock(corpus_test("nkl2"))
    kinds = _kinds(out)
    assert kinds[:2] == ["Rfaa", "Wait"]
    assert "While" in kinds and "Get" in kinds
    rf = next(s for s in stmts(out) if isinstance(s, Rfence))
    assert rf.node == 2  # the lock's home node
    assert kinds.index("Rfence") + 1 == len(kinds) - kinds[::-1].index("Put") - 2  # Rfence; Put(x_r, p); Put(y, 1)
    assert out.dialect == "wait"


def test_sc_write_does_not_wait_and_read_waits_after_release():
    out = lib_impls.inline_sc(corpus_test("fig12d"), deep=False)
    writer, reader = _kinds(out, 0), _kinds(out, 1)
    assert "Wait" not in writer
    assert reader[:4] == ["LockOp", "Get", "LockOp", "Wait"]


def test_deep_sc_inlining_reaches_the_wait_dialect():
    out = lib_impls.inline_sc(corpus_test("fig12a"))
    assert out.dialect == "wait"
    assert parse_litmus(pretty(out)) == out


def test_inlining_is_hygienic():
    src = (CORPUS / "fig5a.lit").read_text().replace("loc y@1 = 0", "loc y@1 = 0\nloc _wl_l_a@1 = 0")
    with pytest.raises(LitmusError, match="collid|clash|already"):
        lib_impls.inline_wlock(parse_litmus(src))


def test_auxiliary_names_are_fresh():
    t = corpus_test("fig12a")
    out = lib_impls.inline_sc(t)
    added = names(out) - names(t)
    assert added and all(n.startswith("_") for n in added)


@pytest.mark.parametrize("name,lib", [("fig5a", "wlock"), ("fig8c", "slock"), ("nkl2", "nlock"),
                                      ("fig12a", "sc")])
def test_inlined_programs_round_trip(name, lib):
    out = lib_impls.inline_library(corpus_test(name), lib)
    assert parse_litmus(pretty(out)) == out


def test_unknown_library():
    with pytest.raises(ValueError):
        lib_impls.inline_library(corpus_test("fig5a"), "brl")


def test_shallow_sc_inlining_keeps_locks_well_formed():
    out = lib_impls.inline_sc(corpus_test("fig12b"), deep=False)
    for p in unfold(out, 1):
        events = [CEvent(e.eid, e.tid, e.eid, e.method, e.args) for e in p.events]
        assert lock_well_formed(events)


# -- behaviour ---------------------------------------------------------------

def test_empty_critical_section_terminates():
    t = lit("""
        test empty_cs
        dialect library
        nodes 1
        lock l
        thread t1@1 { AcqWL(l); RelWL(l) }
    """)
    # One thread takes ticket 0 and finds its release slot at 0 on the first
    # scan, so one loop iteration suffices.
    v = models.run_model(t, "impl:wlock", models.RunConfig(loop_bound=1))
    assert v.outcomes == [{}]


@pytest.mark.parametrize("name,lib,expr,expected", [
    ("fig5a", "wlock", "a != b", "forbidden"),
    ("fig8c", "slock", "a != b", "forbidden"),
    ("fig5e", "slock", "a != b", "forbidden"),
    ("nkl2", "nlock", "a == 1 && b == 0", "allowed"),
    ("nlock_release", "nlock", "z == 1", "allowed"),
    ("fig12a", "sc", "a == 1 && b == 0", "forbidden"),
    ("fig12d", "sc", "a == 1 && b == 0", "allowed"),
])
def test_inlined_verdicts(name, lib, expr, expected):
    v = models.run_model(corpus_test(name), f"impl:{lib}", INLINED)
    assert next(a.observed for a in v.assertions if a.expr == expr) == expected


@pytest.mark.parametrize("name,lib", [("fig5a", "wlock"), ("fig5b", "wlock"), ("fig8c", "slock"),
                                      ("nkl2", "nlock"), ("fig12a", "sc"), ("fig12e", "sc")])
def test_outcome_inclusion(name, lib):
    t = corpus_test(name)
    impl = models.run_model(t, f"impl:{lib}", INLINED).outcome_set()
    assert impl and impl <= wait_model.verdict(t).outcome_set()


def test_implementation_strictly_stronger_on_fig5b():
    t = corpus_test("fig5b")
    impl = models.run_model(t, "impl:wlock", INLINED)
    assert impl.assertions[0].observed == "forbidden"
    assert wait_model.verdict(t).assertions[0].observed == "allowed"


# -- wait to tso -----------------------------------------------------------------

def test_translation_of_fig2a():
    out = lib_impls.translate_wait_to_tso(corpus_test("fig2a"))
    body = out.threads[0].body
    assert isinstance(body[0], Put) and body[0].wid is None and body[0].result
    assert isinstance(body[1], SetAdd) and body[1].set == "_s_t1_d_2"
    loops = [s for s in body if isinstance(s, While)]
    assert len(loops) == 2  # one per node
    assert isinstance(loops[1].body[0], Poll) and loops[1].body[0].node == 2
    assert out.dialect == "tso"


def test_wait_without_ops_exits_immediately():
    t = lit("""
        test idle
        dialect wait
        nodes 2
        loc x@1 = 0
        thread t1@1 { Wait(d); x := 1 }
        assert allowed x == 1
    """)
    out = lib_impls.translate_wait_to_tso(t)
    v = op_sim.op_verdict(out, loop_bound=0)
    assert v.outcomes == [{"x": 1}] and not v.bound_hit


def test_translation_rejects_tso_tests():
    with pytest.raises(LitmusError):
        lib_impls.translate_wait_to_tso(corpus_test("fig1a"))


@pytest.mark.parametrize("name", ["fig2a", "fig2b", "wait_sb"])
def test_translation_outcome_inclusion(name):
    t = corpus_test(name)
    translated = op_sim.op_verdict(lib_impls.translate_wait_to_tso(t)).outcome_set()
    assert translated <= wait_model.verdict(t).outcome_set()
