"""Stamp vocabulary, gettags, and the sto/ippo/oppo tables."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import GOLDEN
from rdmacheck.stamps import (
    IPPO_TSV, NODE_STAMPS, OPPO_TSV, STO, STO_TSV, TSO_LABELS, TSO_NODE_LABELS, WAIT_STAMPS, Stamp, dump_tables,
    ippo_tso, oppo_tso, stamps_of, sto, well_stamped,
)

S = Stamp
node_of = {"x": 1, "y": 2, "z": 2}.__getitem__


def _wait_stamp(kind: str, node: int = 1) -> Stamp:
    return S(kind, node if kind in NODE_STAMPS else None)


def _tso_label(kind: str, node: int = 1) -> Stamp:
    return S(kind, node if kind in TSO_NODE_LABELS else None)


@pytest.mark.parametrize("name,text", [("sto", STO_TSV), ("ippo", IPPO_TSV), ("oppo", OPPO_TSV)])
def test_tables_byte_match_goldens(name, text):
    assert (GOLDEN / f"{name}.tsv").read_bytes() == text.encode()


def test_dump_tables_contains_all_three():
    out = dump_tables()
    assert out.startswith("sto\t") and "\nippo\t" in out and "\noppo\t" in out


def test_node_present_iff_per_node_family():
    with pytest.raises(ValueError):
        S("aCW", 1)
    with pytest.raises(ValueError):
        S("nRW")
    assert str(S("naRR", 2)) == "naRR_2"


# -- gettags ----------------------------------------------------------------

def test_write_stamps():
    assert stamps_of("Write", ("x", 1), node_of=node_of) == {frozenset({S("aCW")})}


def test_rfaa_stamps():
    assert stamps_of("RFAA", ("x", "y", 1, "d"), node_of=node_of) == {
        frozenset({S("naRR", 2), S("nRW", 2), S("nLW", 2)})}


def test_rcas_has_fail_and_success_sets():
    sets = stamps_of("RCAS", ("x", "y", 1, 2, "d"), node_of=node_of)
    assert sets == {frozenset({S("naRR", 2), S("nLW", 2)}),
                    frozenset({S("naRR", 2), S("nRW", 2), S("nLW", 2)})}


def test_cpu_cas_output_selects_the_set():
    assert stamps_of("CAS", ("x", 0, 1), output=0, node_of=node_of) == {frozenset({S("aCAS")})}
    assert stamps_of("CAS", ("x", 0, 1), output=1, node_of=node_of) == {frozenset({S("aMF"), S("aCR")})}


def test_put_get_stamps():
    assert stamps_of("Put", ("y", "x", "d"), node_of=node_of) == {frozenset({S("nLR", 2), S("nRW", 2)})}
    assert stamps_of("Get", ("x", "y", "d"), node_of=node_of) == {frozenset({S("nRR", 2), S("nLW", 2)})}


def test_unknown_method():
    with pytest.raises(ValueError):
        stamps_of("Frobnicate", ())


def test_well_stamped():
    assert well_stamped("Write", ("x", 1), [S("aCW")], node_of=node_of)
    assert not well_stamped("Write", ("x", 1), [S("aCR")], node_of=node_of)


@pytest.mark.parametrize("method,args", [
    ("Read", ("x",)), ("Write", ("x", 1)), ("CAS", ("x", 0, 1)), ("Mfence", ()), ("Wait", ("d",)),
    ("Rfence", (2,)), ("Put", ("y", "x", "d")), ("Get", ("x", "y", "d")), ("RFAA", ("x", "y", 1, "d")),
    ("RCAS", ("x", "y", 0, 1, "d")),
])
def test_every_stamp_set_is_nonempty(method, args):
    sets = stamps_of(method, args, node_of=node_of)
    assert sets and all(sets)


# -- sto ----------------------------------------------------------------------

def test_sto_examples():
    assert not sto(S("aCW"), S("aCR"))
    assert sto(S("naRR", 2), S("nRW", 2))
    assert not sto(S("naRR", 2), S("nRW", 3))


@pytest.mark.parametrize("kind", WAIT_STAMPS)
def test_global_fence_orders_everything(kind):
    assert sto(S("gF", 1), _wait_stamp(kind, 2))
    assert sto(S("gF", 1), _wait_stamp(kind, 1))


# -- ippo / oppo ----------------------------------------------------------------

def test_ippo_oppo_examples():
    assert ippo_tso(S("lW"), S("lR")) and not oppo_tso(S("lW"), S("lR"))
    assert not oppo_tso(S("narW", 2), S("nlW", 2))
    assert not oppo_tso(S("nrW", 2), S("nF", 2)) and ippo_tso(S("nrW", 2), S("nF", 2))


def test_sqp_cells_need_same_thread_and_node():
    assert ippo_tso(S("nrW", 2), S("nF", 2), same_thread=True)
    assert not ippo_tso(S("nrW", 2), S("nF", 2), same_thread=False)
    assert not ippo_tso(S("nrW", 2), S("nF", 3), same_thread=True)


def test_oppo_included_in_ippo_exhaustively():
    for a, b in itertools.product(TSO_LABELS, repeat=2):
        for na, nb in ((1, 1), (1, 2)):
            for same in (True, False):
                sa, sb = _tso_label(a, na), _tso_label(b, nb)
                if oppo_tso(sa, sb, same):
                    assert ippo_tso(sa, sb, same), (sa, sb, same)


@given(a=st.sampled_from(TSO_LABELS), b=st.sampled_from(TSO_LABELS), na=st.integers(1, 3),
       nb=st.integers(1, 3), same=st.booleans())
def test_oppo_implies_ippo(a, b, na, nb, same):
    sa, sb = _tso_label(a, na), _tso_label(b, nb)
    assert not oppo_tso(sa, sb, same) or ippo_tso(sa, sb, same)


@given(a=st.sampled_from(WAIT_STAMPS), b=st.sampled_from(WAIT_STAMPS), na=st.integers(1, 3),
       nb=st.integers(1, 3))
def test_sto_cells_depend_on_nodes_only_when_same_node(a, b, na, nb):
    got = sto(_wait_stamp(a, na), _wait_stamp(b, nb))
    cell = STO[(a, b)]
    if cell == "SN":
        assert got == (na == nb)
    else:
        assert got == (cell == "Y")
