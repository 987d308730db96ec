"""Library specifications: lock well-formedness, locks, brl and the SC library."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS, corpus_test, lit
from rdmacheck import lib_specs, wait_model
from rdmacheck.exec_enum import CEvent, brute_force_outcomes, enumerate_candidates, lock_well_formed
from rdmacheck.litmus import parse_litmus, unfold


def _events(*calls):
    """CEvents from ``(tid, method)`` pairs on lock ``l``, positions in order."""
    pos: dict = {}
    out = []
    for i, (tid, method) in enumerate(calls):
        pos[tid] = pos.get(tid, -1) + 1
        out.append(CEvent(i, tid, pos[tid], method, ("l",)))
    return out


def test_lock_well_formed_examples():
    assert lock_well_formed(_events((0, "AcqWL"), (0, "RelWL"), (1, "AcqWL"), (1, "RelWL")))
    assert not lock_well_formed(_events((0, "AcqWL"), (0, "AcqWL")))
    assert not lock_well_formed(_events((0, "RelWL")))


def observed(test, expr: str) -> str:
    v = wait_model.verdict(test)
    return next(a.observed for a in v.assertions if a.expr == expr)


@pytest.mark.parametrize("name,expr,expected", [
    ("fig5a", "a != b", "forbidden"),
    ("fig5b", "a != b", "allowed"),
    ("fig5d", "a != b", "forbidden"),
    ("fig5e", "a != b", "forbidden"),
    ("fig8c", "a != b", "forbidden"),
    ("nkl1", "a == 1 && b == 0", "forbidden"),
    ("fig5f", "a != b", "forbidden"),
    ("nkl2", "a == 1 && b == 0", "allowed"),
    ("lkln3", "a == 1 && b == 0", "forbidden"),
    ("lkln3", "a == 1 && c == 0", "allowed"),
    ("fig12a", "a == 1 && b == 0", "forbidden"),
    ("fig12b", "a == 0 && b == 0", "forbidden"),
    ("fig12c", "x == 2", "forbidden"),
])
def test_library_verdicts(name, expr, expected):
    assert observed(corpus_test(name), expr) == expected


def test_ill_formed_lock_use_allows_anything():
    # fig5a with t2 acquiring twice: the library promises nothing, so the
    # a != b outcome of the unlocked program comes back.
    t = corpus_test("fig5a")
    text = (CORPUS / "fig5a.lit").read_text().replace("  AcqWL(l);\n  a := x;", "  AcqWL(l);\n  AcqWL(l);\n  a := x;")
    assert observed(t, "a != b") == "forbidden"
    assert observed(parse_litmus(text), "a != b") == "allowed"


def test_brl_read_after_own_write_sees_it():
    t = lit("""
        test brl1
        dialect library
        nodes 1
        brl x = 0
        thread t1@1 { BrlWrite(x, 1); c := BrlRead(x) }
        assert forbidden c == 0
        assert allowed c == 1
    """)
    v = wait_model.verdict(t)
    assert [a.observed for a in v.assertions] == ["forbidden", "allowed"]


def test_brl_read_without_write_is_zero():
    t = lit("""
        test brl0
        dialect library
        nodes 2
        brl x = 0
        thread t1@1 { c := BrlRead(x) }
        assert forbidden c != 0
    """)
    assert wait_model.verdict(t).passed


def _library_candidates(name):
    t = corpus_test(name)
    return [c for p in unfold(t) for c in enumerate_candidates(t, p, "wait")]


@pytest.mark.parametrize("name,pred", [
    ("fig5a", lib_specs.wlock_consistent),
    ("fig5e", lib_specs.slock_consistent),
    ("nkl2", lib_specs.nlock_consistent),
    ("fig12a", lib_specs.strl_consistent),
])
def test_predicates_accept_some_candidate(name, pred):
    assert any(pred(c) for c in _library_candidates(name))


def test_composed_rejects_what_a_library_rejects():
    for c in _library_candidates("fig5a"):
        if not lib_specs.wlock_consistent(c):
            assert not wait_model.check_composed(c)


@pytest.mark.parametrize("name", ["fig5a", "fig5d", "nkl1", "nkl2", "fig12b"])
def test_library_search_matches_oracle(name):
    t = corpus_test(name)
    assert brute_force_outcomes(t, "wait", wait_model.check_composed) == wait_model.search(t).outcomes


# -- the SC library on sequential histories ---------------------------------

_sc_ops = st.lists(st.one_of(
    st.tuples(st.just("w"), st.integers(0, 2)),
    st.tuples(st.just("r")),
    st.tuples(st.just("cas"), st.integers(0, 2), st.integers(0, 2)),
    st.tuples(st.just("faa"), st.integers(1, 2)),
), min_size=1, max_size=4)


def _sequential(ops):
    """Direct interpreter: final x and register values."""
    x, regs = 0, {}
    for i, op in enumerate(ops):
        if op[0] == "w":
            x = op[1]
        elif op[0] == "r":
            regs[f"r{i}"] = x
        elif op[0] == "cas":
            regs[f"r{i}"] = x
            if x == op[1]:
                x = op[2]
        else:
            regs[f"r{i}"] = x
            x += op[1]
    return x, regs


def _sc_program(ops) -> str:
    stmts = []
    for i, op in enumerate(ops):
        if op[0] == "w":
            stmts.append(f"ScWrite(x, {op[1]})")
        elif op[0] == "r":
            stmts.append(f"r{i} := ScRead(x)")
        elif op[0] == "cas":
            stmts.append(f"r{i} := ScCas(x, {op[1]}, {op[2]})")
        else:
            stmts.append(f"r{i} := ScFaa(x, {op[1]})")
    return ("test seq\ndialect library\nnodes 1\nsc x@1 = 0\nthread t1@1 { "
            + "; ".join(stmts) + " }\n")


@settings(max_examples=40, deadline=None)
@given(ops=_sc_ops)
def test_sc_single_thread_is_sequential(ops):
    t = parse_litmus(_sc_program(ops))
    x, regs = _sequential(ops)
    want = {"x": x, **{f"t1.{r}": v for r, v in regs.items()}}
    outcomes = wait_model.verdict(t).outcomes
    assert outcomes == [want]
