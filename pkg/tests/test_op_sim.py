"""The operational machine: states, rules, exploration and invariants."""

from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_names, corpus_test, lit
from rdmacheck import lib_impls, op_sim, tso_decl
from rdmacheck.engine import ResourceLimit
from rdmacheck.op_sim import Machine, QueuePair, check_invariants, explore, initial_state, is_final
from rdmacheck.randgen import GenConfig, random_test


def finals(test, key):
    return sorted({dict(o)[key] for o in explore(test).outcomes})


def _two_node_test():
    return lit("""
        test qp
        dialect tso
        nodes 2
        loc a@1 = 0
        loc y@2 = 0
        thread t1@1 { skip }
    """)


def test_initial_state_of_fig1a():
    st0 = initial_state(corpus_test("fig1a"))
    assert st0.mem() == {"x": 0, "z": 0}
    assert st0.buffers == ((),) and st0.qps == () and st0.busy == frozenset()


def test_zero_thread_test_is_final():
    t = lit("""
        test none
        dialect tso
        nodes 1
        loc x@1 = 0
    """)
    assert is_final(initial_state(t))
    assert explore(t).outcomes == {(("x", 0),)}


def test_nonzero_initial_value():
    t = lit("""
        test init
        dialect tso
        nodes 1
        loc x@1 = 5
    """)
    assert initial_state(t).mem()["x"] == 5


def test_remote_write_commits_wbr_head():
    t = _two_node_test()
    m = Machine(t)
    st0 = m.settle(initial_state(t))
    st1 = replace(st0, qps=(((0, 2), QueuePair(wbr=(("RW", "y", 1),))),))
    (label, nxt), = m.step(st1)
    assert label == "remote-write (t1->n2)"
    assert nxt.mem()["y"] == 1 and nxt.qps == ()


def test_rcas_blocked_while_node_lock_busy():
    t = _two_node_test()
    m = Machine(t)
    st0 = m.settle(initial_state(t))
    pipe = (("RCAS", "a", "y", 0, 1, 1000),)
    free = replace(st0, qps=(((0, 2), QueuePair(pipe=pipe)),))
    assert [lab for lab, _ in m.step(free)] == ["nCAS-S (t1->n2)"]
    busy = replace(free, busy=frozenset({2}))
    assert m.step(busy) == []


def test_single_write_is_a_two_step_trace():
    t = lit("""
        test w
        dialect tso
        nodes 1
        loc x@1 = 0
        thread t1@1 { x := 1 }
    """)
    res = explore(t, traces=True)
    assert res.outcomes == {(("x", 1),)}
    assert res.traces[(("x", 1),)] == ["t1: lW(x,1)", "t1: flush x:=1"]


def test_two_writers():
    t = lit("""
        test ww
        dialect tso
        nodes 1
        loc x@1 = 0
        thread t1@1 { x := 1 }
        thread t2@1 { x := 2 }
    """)
    assert finals(t, "x") == [1, 2]


def test_fig1c_never_reaches_z1():
    assert finals(corpus_test("fig1c"), "z") == [0]


def test_rmw_mutual_atomicity():
    # 0+1 then failed CAS gives 1; CAS 0->2 then +1 gives 3; never 2
    assert finals(corpus_test("rcas_atomicity_c"), "x") == [1, 3]


def test_faa_returns_old_value():
    t = lit("""
        test faa
        dialect tso
        nodes 2
        loc u@1 = 0
        loc x@2 = 2
        thread t1@1 { Rfaa(u, x, 5); Poll(2) }
    """)
    assert explore(t).outcomes == {(("u", 2), ("x", 7))}


def test_poll_with_nothing_pending_deadlocks():
    t = lit("""
        test p
        dialect tso
        nodes 2
        loc x@1 = 0
        thread t1@1 { Poll(2) }
    """)
    res = explore(t)
    assert res.outcomes == set() and res.deadlocks == 1


def test_state_cap():
    with pytest.raises(ResourceLimit):
        explore(corpus_test("rcas_reordering_c"), max_states=10)


def test_encoding_is_deterministic():
    t = corpus_test("fig1b")
    assert initial_state(t).encode() == initial_state(t).encode()


def test_rejects_wait_dialect():
    from rdmacheck.litmus import LitmusError

    with pytest.raises(LitmusError):
        initial_state(corpus_test("fig2a"))


@pytest.mark.parametrize("name", corpus_names("tso"))
def test_operational_equals_declarative_on_corpus(name):
    t = corpus_test(name)
    assert op_sim.op_verdict(t).outcome_set() == tso_decl.tso_verdict(t).outcome_set()


@pytest.mark.parametrize("name", corpus_names("tso") + corpus_names("wait"))
def test_invariants_on_reachable_states(name):
    t = corpus_test(name)
    if t.dialect == "wait":
        t = lib_impls.translate_wait_to_tso(t)
    for s in op_sim.reachable_states(t):
        assert check_invariants(s) == []


@pytest.mark.parametrize("name", corpus_names("tso"))
def test_traces_replay_and_use_known_rules(name):
    t = corpus_test(name)
    res = explore(t, traces=True)
    for outcome, trace in res.traces.items():
        assert outcome in op_sim.replay_trace(t, trace)
        for label in trace:
            if "->n" in label:
                assert label.split(" (")[0] in op_sim.QP_RULES


def test_invariant_checker_detects_violations():
    t = _two_node_test()
    st0 = initial_state(t)
    bad = replace(st0, busy=frozenset({2}))
    assert check_invariants(bad)
    bad = replace(st0, qps=(((0, 2), QueuePair(wbr=(("LW", "a", 1, 1000),))),))
    assert check_invariants(bad)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_programs_agree_and_keep_invariants(seed):
    t = random_test(seed, GenConfig(dialect="tso", max_events=6))
    res = explore(t, check=True)
    assert res.outcomes == tso_decl.tso_verdict(t).outcome_set()
