"""Declarative tso model: label sequences, ib/ob and verdicts."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_names, corpus_test, lit
from rdmacheck import tso_decl
from rdmacheck.exec_enum import enumerate_candidates
from rdmacheck.litmus import unfold
from rdmacheck.randgen import GenConfig, random_test

node_of = {"x": 1, "y": 2, "z": 1}.__getitem__


def test_get_labels():
    assert tso_decl.label_sequences("Get", ("x", "y", None), node_of) == [("nrR_2", "nlW_2")]


def test_rcas_labels():
    # success: read, atomic write, local write; failure: read and local write only
    assert tso_decl.label_sequences("RCAS", ("z", "y", 0, 2, None), node_of) == [
        ("narR_2", "narW_2", "nlW_2"), ("narR_2", "nlW_2")]


def test_failed_cpu_cas_is_fence_then_read():
    assert tso_decl.label_sequences("CAS", ("x", 0, 1), node_of)[1] == ("MF", "lR")


def test_wait_is_not_a_tso_instruction():
    from rdmacheck.litmus import LitmusError

    with pytest.raises(LitmusError):
        tso_decl.label_sequences("Wait", ("d",), node_of)


def test_skip_has_no_labels():
    t = lit("""
        test s
        dialect tso
        nodes 1
        thread t1@1 { skip }
    """)
    assert [p.events for p in unfold(t)] == [()]
    v = tso_decl.tso_verdict(t)
    assert v.outcomes == [{}]


def observed(test, expr):
    v = tso_decl.tso_verdict(test)
    return next(a.observed for a in v.assertions if a.expr == expr)


@pytest.mark.parametrize("name,expr,expected", [
    ("fig1a", "z == 1", "forbidden"),
    ("fig1b", "z == 1", "allowed"),
    ("fig1c", "z == 1", "forbidden"),
    ("rcas_atomicity_b", "x == 2", "allowed"),
    ("rcas_reordering_c", "a == 0 && b == 0", "allowed"),
    ("cas_inset", "x == 2", "forbidden"),
])
def test_verdicts(name, expr, expected):
    assert observed(corpus_test(name), expr) == expected


def test_single_event_is_consistent():
    t = lit("""
        test one
        dialect tso
        nodes 1
        loc x@1 = 0
        thread t1@1 { x := 1 }
    """)
    (p,) = unfold(t)
    (c,) = enumerate_candidates(t, p, "tso")
    rel = tso_decl.tso_relations(c)
    assert tso_decl.check_tso(c)
    assert not rel["ib"] and not rel["ob"]


def test_poll_without_remote_ops_is_infeasible():
    t = lit("""
        test p
        dialect tso
        nodes 2
        loc x@1 = 0
        thread t1@1 { Poll(2); x := 1 }
    """)
    assert tso_decl.tso_verdict(t).outcomes == []


@pytest.mark.parametrize("name", corpus_names("tso"))
def test_witnesses_recheck(name):
    v = tso_decl.tso_verdict(corpus_test(name))
    for w in v.witnesses.values():
        assert tso_decl.check_tso(w)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_fixpoint_closure_properties(seed):
    t = random_test(seed, GenConfig(dialect="tso", max_events=5, count="labels"))
    for p in unfold(t):
        for c in enumerate_candidates(t, p, "tso"):
            if not tso_decl.check_tso(c):
                continue
            rel = tso_decl.tso_relations(c)
            ib, ob = rel["ib"], rel["ob"]
            inst = {s.id for s in c.subs if s.kind not in tso_decl.NON_INST}
            assert rel["ippo"] <= ib and rel["oppo"] <= ob
            assert {(a, b) for a, b in ob if b in inst} <= ib
            assert {(a, b) for a, b in ib if a in inst} <= ob
            # both are transitive
            assert {(a, d) for a, b in ib for c2, d in ib if b == c2} <= ib
            assert {(a, d) for a, b in ob for c2, d in ob if b == c2} <= ob
