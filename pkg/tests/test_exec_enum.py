"""Candidate enumeration and the derived relations of the WAIT model."""

from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus_test, lit
from rdmacheck import tso_decl, wait_model
from rdmacheck.exec_enum import brute_force_outcomes, derive, dump_graph, enumerate_candidates, nfo_pairs
from rdmacheck.litmus import unfold
from rdmacheck.randgen import GenConfig, random_test


def _candidates(test, dialect="wait", pick=lambda p: True):
    return [c for p in unfold(test) if pick(p) for c in enumerate_candidates(test, p, dialect)]


def test_two_concurrent_writes_give_two_mo_orders():
    t = lit("""
        test ww
        nodes 2
        loc x@1 = 0
        thread t1@1 { x := 1 }
        thread t2@1 { x := 2 }
    """)
    cands = _candidates(t)
    assert len(cands) == 2
    assert {tuple(c.mo["x"]) for c in cands} == {(0, 1), (1, 0)}


def test_read_of_written_value_forces_rf():
    t = lit("""
        test wr
        nodes 1
        loc x@1 = 0
        thread t1@1 { x := 1 }
        thread t2@1 { a := x }
    """)
    cands = _candidates(t, pick=lambda p: any(e.method == "Read" and e.output == 1 for e in p.events))
    assert len(cands) == 1
    c = cands[0]
    (read,) = c.reads()
    (write,) = c.writes()
    assert c.rf == {read.id: write.id}


def test_rcas_against_rfaa_has_two_rao_orders():
    t = corpus_test("rcas_atomicity_c")
    feasible = 0
    for p in unfold(t):
        raos = {tuple(sorted((n, tuple(o)) for n, o in c.rao.items())) for c in enumerate_candidates(t, p, "tso")}
        if raos:  # unfoldings whose read values no write can supply have no candidates
            feasible += 1
            assert len(raos) == 2
    assert feasible


def _wait_candidate(src: str, pick=lambda p: True):
    t = lit(src)
    return next(c for c in _candidates(t, pick=pick))


def _by_kind(c):
    return {s.kind: s.id for s in c.subs}


def test_get_iso():
    c = _wait_candidate("""
        test g
        nodes 2
        loc x@1 = 0
        loc y@2 = 0
        thread t1@1 { Get(x, y, d) }
    """)
    k = _by_kind(c)
    assert (k["nRR"], k["nLW"]) in derive(c).iso


def _rcas_candidate(success: bool):
    # y starts at 0: expecting 0 succeeds, expecting 1 fails.
    t = lit(f"""
        test r
        nodes 2
        loc x@1 = 0
        loc y@2 = 0
        thread t1@1 {{ Rcas(x, y, {0 if success else 1}, 2, d) }}
    """)
    for p in unfold(t):
        for c in enumerate_candidates(t, p, "wait"):
            if any(s.kind == "nRW" for s in c.subs) == success:
                return c
    raise AssertionError("no such candidate")


def test_successful_rcas_iso():
    c = _rcas_candidate(True)
    k = _by_kind(c)
    iso = derive(c).iso
    assert {(k["naRR"], k["nRW"]), (k["naRR"], k["nLW"])} <= iso


def test_failed_rcas_iso():
    c = _rcas_candidate(False)
    k = _by_kind(c)
    assert derive(c).iso == {(k["naRR"], k["nLW"])}


def test_nfo_one_orientation_per_pair():
    t = lit("""
        test n
        nodes 2
        loc x@1 = 0
        loc y@2 = 0
        thread t1@1 { Put(y, x, d); Get(x, y, e) }
    """)
    for p in unfold(t):
        cands = list(enumerate_candidates(t, p, "wait"))
        pairs = nfo_pairs(cands[0].subs, "wait")
        assert pairs
        for c in cands:
            assert len(c.nfo) == len(pairs)
            for a, b in pairs:
                assert ((a, b) in c.nfo) != ((b, a) in c.nfo)


def test_dump_graph_is_deterministic():
    c = _wait_candidate("""
        test g
        nodes 2
        loc x@1 = 0
        loc y@2 = 0
        thread t1@1 { Get(x, y, d); Wait(d) }
    """)
    text = dump_graph(c)
    assert text == dump_graph(c)
    assert "rf" in text


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_pruned_search_matches_oracle_tso(seed):
    t = random_test(seed, GenConfig(dialect="tso", max_events=6, count="labels"))
    assert brute_force_outcomes(t, "tso", tso_decl.check_tso) == tso_decl.search(t).outcomes


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_pruned_search_matches_oracle_wait(seed):
    t = random_test(seed, GenConfig(dialect="wait", max_events=6, count="labels"))
    assert brute_force_outcomes(t, "wait", wait_model.check_composed) == wait_model.search(t).outcomes


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_enumeration_is_duplicate_free(seed):
    t = random_test(seed, GenConfig(dialect="wait", max_events=5, count="labels"))
    for p in unfold(t):
        keys = [(tuple(sorted(c.rf.items())), tuple(sorted(c.mo.items())), c.nfo,
                 tuple(sorted(c.rao.items()))) for c in enumerate_candidates(t, p, "wait")]
        assert len(keys) == len(set(keys))
