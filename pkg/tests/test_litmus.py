"""Parsing, pretty-printing and unfolding of litmus tests."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_names, corpus_test, lit
from rdmacheck.litmus import (
    BinOp, Const, LitmusError, Loop, Poll, Put, Read, Var, Write, parse_litmus, pretty, pretty_expr, unfold,
    value_domain,
)
from rdmacheck.randgen import GenConfig, random_test


def test_fig1a_shape():
    t = corpus_test("fig1a")
    assert t.nodes == 2 and t.dialect == "tso"
    assert [(th.name, th.node) for th in t.threads] == [("t1", 1)]
    assert isinstance(t.threads[0].body[0], Put) and isinstance(t.threads[0].body[1], Poll)
    assert isinstance(t.threads[0].body[2], Write)
    assert [(pretty_expr(a.cond), a.expected) for a in t.assertions] == [("z == 0", "allowed"),
                                                                          ("z == 1", "forbidden")]


def test_empty_program_has_zero_events():
    t = lit("""
        test empty
        nodes 1
        loc x@1 = 0
        assert allowed x == 0
    """)
    assert t.threads == ()
    assert [p.events for p in unfold(t)] == [()]


def test_wait_in_tso_dialect_is_rejected():
    with pytest.raises(LitmusError, match="dialect mismatch"):
        lit("""
            test w
            dialect tso
            nodes 2
            loc x@1 = 0
            thread t1@1 { Wait(d) }
        """)


def test_poll_in_wait_dialect_is_rejected():
    with pytest.raises(LitmusError, match="dialect mismatch"):
        lit("""
            test w
            dialect wait
            nodes 2
            thread t1@1 { Poll(2) }
        """)


def test_syntax_error_reports_position():
    with pytest.raises(LitmusError) as err:
        parse_litmus("test w\nnodes 2\nthread t1@1 { x := }\n")
    assert err.value.line == 3 and err.value.column is not None


def test_undeclared_location_in_assertion():
    with pytest.raises(LitmusError, match="undeclared"):
        parse_litmus("test e\nnodes 1\nassert allowed x == 0\n")


def test_put_source_must_be_local():
    with pytest.raises(LitmusError, match="not local"):
        lit("""
            test p
            nodes 2
            loc x@1 = 0
            loc y@2 = 0
            thread t1@2 { Put(x, x) }
        """)


def test_nonzero_initial_value():
    t = lit("""
        test init
        nodes 1
        loc x@1 = 5
        thread t1@1 { a := x }
        assert allowed a == 5
    """)
    assert t.loc("x").init == 5
    assert 5 in value_domain(t)


def test_single_write_unfolds_to_one_event():
    t = lit("""
        test w
        nodes 1
        loc x@1 = 0
        thread t1@1 { x := 1 }
    """)
    plains = list(unfold(t))
    assert len(plains) == 1
    assert [e.method for e in plains[0].events] == ["Write"]


def test_loop_unfolding_count():
    # 0, 1 or 2 reads, each returning 0 or 1: 1 + 2 + 4 executions.
    t = lit("""
        test l
        nodes 1
        loc x@1 = 0
        thread t1@1 { loop { a := x } }
    """)
    assert isinstance(t.threads[0].body[0], Loop)
    assert isinstance(t.threads[0].body[0].body[0], Read)
    plains = list(unfold(t, 2, (0, 1)))
    assert len(plains) == 7
    assert sorted(len(p.events) for p in plains) == [0, 1, 1, 2, 2, 2, 2]


def test_fig1a_unfolds_per_put_read_value():
    plains = list(unfold(corpus_test("fig1a")))
    assert len(plains) == 2
    assert sorted(p.events[0].reads for p in plains) == [(0,), (1,)]


def test_choice_unfolds_both_branches():
    t = lit("""
        test c
        nodes 1
        loc x@1 = 0
        thread t1@1 { choice { x := 1 } or { x := 2 } }
    """)
    assert sorted(p.events[0].args for p in unfold(t)) == [("x", 1), ("x", 2)]


def test_pretty_expr_parenthesises_only_when_needed():
    assert pretty_expr(BinOp("&&", BinOp("==", Var("a"), Const(1)), BinOp("==", Var("b"), Const(0)))) \
        == "a == 1 && b == 0"
    assert pretty_expr(BinOp("==", BinOp("==", Var("a"), Const(1)), Const(1))) == "(a == 1) == 1"
    assert pretty_expr(BinOp("-", Var("a"), BinOp("-", Var("b"), Const(1)))) == "a - (b - 1)"


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_round_trip(name):
    t = corpus_test(name)
    assert parse_litmus(pretty(t)) == t


@pytest.mark.parametrize("name", corpus_names())
def test_po_is_total_per_thread(name):
    t = corpus_test(name)
    for p in unfold(t, 2):
        ids = [e.eid for e in p.events]
        assert len(ids) == len(set(ids))
        po = p.po
        for a in p.events:
            assert (a.eid, a.eid) not in po
            for b in p.events:
                if a.tid == b.tid and a.eid != b.eid:
                    assert ((a.eid, b.eid) in po) != ((b.eid, a.eid) in po)
                elif a.tid != b.tid:
                    assert (a.eid, b.eid) not in po


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), dialect=st.sampled_from(["tso", "wait"]))
def test_random_round_trip(seed, dialect):
    t = random_test(seed, GenConfig(dialect=dialect))
    assert parse_litmus(pretty(t)) == t


@settings(max_examples=30, deadline=None)
@given(bound=st.integers(0, 3), values=st.sets(st.integers(0, 3), min_size=1, max_size=3))
def test_unfolding_is_exhaustive_and_duplicate_free(bound, values):
    t = lit("""
        test l
        nodes 1
        loc x@1 = 0
        thread t1@1 { loop { a := x } }
    """)
    dom = tuple(sorted(values))
    runs = [tuple(e.output for e in p.events) for p in unfold(t, bound, dom)]
    assert len(runs) == len(set(runs))
    assert len(runs) == sum(len(dom) ** k for k in range(bound + 1))
