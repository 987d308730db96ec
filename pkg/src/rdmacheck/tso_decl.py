"""Declarative TSO model with remote RMWs: labels, consistency and verdicts.

Every instruction of a tso-dialect program becomes one or more labelled
events, each with its own program-order position.  A candidate is consistent
iff both ``ib`` (issued-before) and ``ob`` (observed-before) are irreflexive,
where the two are the least relations closed under::

    ib = (ippo ∪ rf ∪ pf ∪ nfo ∪ fri ∪ ob;[Inst])⁺
    ob = (oppo ∪ rfe ∪ [nlW];pf ∪ nfo ∪ rb ∪ mo ∪ rao ∪ ar;rao ∪ [Inst];ib)⁺
"""

from __future__ import annotations

from .engine import Rules, Search, Skeleton, edge
from .exec_enum import CandidateExecution, base_relations, lock_groups, tso_pf
from .litmus import DEFAULT_LOOP_BOUND, LitmusError, LitmusTest
from .relations import compose, irreflexive, mask_of, order_pairs, transitive_closure
from .report import Verdict, judge
from .stamps import Stamp, SubSpec, Variant, WriteVal, ippo_tso, oppo_tso

IB, OB = 0, 1
NON_INST = frozenset({"lW", "nlW", "nrW", "narW"})


# ---------------------------------------------------------------------------
# Labels


def label_variants(method: str, args: tuple, node_of) -> list[Variant]:
    """The label sequence of one instruction, per admissible outcome.

    NIC labels carry the remote node of their queue pair.
    """
    S = Stamp
    if method == "Read":
        (x,) = args
        return [Variant((SubSpec(S("lR"), x, read=0),))]
    if method == "Write":
        x, v = args
        return [Variant((SubSpec(S("lW"), x, write=WriteVal(None, v)),))]
    if method == "CAS":
        x, exp, new = args
        return [
            Variant((SubSpec(S("CAS"), x, read=0, write=WriteVal(None, new)),), ("==", 0, exp)),
            Variant((SubSpec(S("MF")), SubSpec(S("lR"), x, read=0)), ("!=", 0, exp)),
        ]
    if method == "Mfence":
        return [Variant((SubSpec(S("MF")),))]
    if method == "Poll":
        (n,) = args
        return [Variant((SubSpec(S("P", n)),))]
    if method == "Rfence":
        (n,) = args
        return [Variant((SubSpec(S("nF", n)),))]
    if method == "Get":
        x, y, _wid = args
        n = node_of(y)
        return [Variant((SubSpec(S("nrR", n), y, read=0), SubSpec(S("nlW", n), x, write=WriteVal(0))))]
    if method == "Put":
        y, x, _wid = args
        n = node_of(y)
        src = x if isinstance(x, str) else ("#k", x)
        return [Variant((SubSpec(S("nlR", n), src, read=0), SubSpec(S("nrW", n), y, write=WriteVal(0))))]
    if method == "RFAA":
        x, y, add, _wid = args
        n = node_of(y)
        return [Variant((
            SubSpec(S("narR", n), y, read=0),
            SubSpec(S("narW", n), y, write=WriteVal(0, add)),
            SubSpec(S("nlW", n), x, write=WriteVal(0)),
        ))]
    if method == "RCAS":
        x, y, exp, new, _wid = args
        n = node_of(y)
        return [
            Variant((
                SubSpec(S("narR", n), y, read=0),
                SubSpec(S("narW", n), y, write=WriteVal(None, new)),
                SubSpec(S("nlW", n), x, write=WriteVal(0)),
            ), ("==", 0, exp)),
            Variant((SubSpec(S("narR", n), y, read=0), SubSpec(S("nlW", n), x, write=WriteVal(0))),
                    ("!=", 0, exp)),
        ]
    raise LitmusError(f"{method} is not a tso-dialect instruction")


def tso_builder(test: LitmusTest):
    """Builder mapping tso-dialect calls to their label sequences."""

    def build(method: str, args: tuple, thread_node: int) -> list[Variant]:
        return label_variants(method, args, test.node_of)

    return build


def label_sequences(method: str, args: tuple, node_of) -> list[tuple[str, ...]]:
    """Label kinds of one instruction, per variant (for documentation and tests)."""
    return [tuple(str(s.stamp) for s in v.subs) for v in label_variants(method, args, node_of)]


# ---------------------------------------------------------------------------
# From-scratch consistency


def tso_relations(c: CandidateExecution) -> dict[str, set]:
    """ib, ob and their ingredients, computed with plain set operations."""
    S = c.subs
    kind = {s.id: s.kind for s in S}
    rf, mo, rb = base_relations(c)
    po = {(a.id, b.id) for a in S for b in S if c.po(a, b)}
    ippo = {(a.id, b.id) for a in S for b in S if c.po(a, b) and ippo_tso(a.stamp, b.stamp)}
    oppo = {(a.id, b.id) for a in S for b in S if c.po(a, b) and oppo_tso(a.stamp, b.stamp)}
    sthd = lambda a, b: S[a].tid == S[b].tid
    rfi = {(w, r) for w, r in rf if kind[w] == "lW" and kind[r] == "lR" and sthd(w, r)}
    rfe = rf - rfi
    fri = {(r, w) for r, w in rb if kind[r] == "lR" and kind[w] == "lW" and sthd(r, w)}
    imm_po = {(a, b) for a, b in po if S[a].pos + 1 == S[b].pos}
    ar = {(w, r) for r, w in imm_po if kind[w] == "narW"}
    rao = set()
    for order in c.rao.values():
        rao |= order_pairs(order)
    pf = set(c.pf)
    nlw_pf = {(w, p) for w, p in pf if kind[w] == "nlW"}
    nfo = set(c.nfo)
    inst = {s.id for s in S if s.kind not in NON_INST}
    ib_base = ippo | rf | pf | nfo | fri
    ob_base = oppo | rfe | nlw_pf | nfo | rb | mo | rao | compose(ar, rao)
    ib, ob = transitive_closure(ib_base), transitive_closure(ob_base)
    while True:
        ib2 = transitive_closure(ib | {(a, b) for a, b in ob if b in inst})
        ob2 = transitive_closure(ob | {(a, b) for a, b in ib2 if a in inst})
        if ib2 == ib and ob2 == ob:
            break
        ib, ob = ib2, ob2
    return {"ippo": ippo, "oppo": oppo, "rfi": rfi, "rfe": rfe, "rb": rb, "fri": fri, "ar": ar,
            "ib": ib, "ob": ob}


def check_tso(c: CandidateExecution) -> bool:
    """Consistency of a tso candidate: well formed, and ib and ob irreflexive."""
    from .wait_model import well_formed

    if c.dialect != "tso" or not well_formed(c):
        return False
    if set(c.pf) != set(tso_pf(c.events, c.subs)):
        return False
    rel = tso_relations(c)
    return irreflexive(rel["ib"]) and irreflexive(rel["ob"])


# ---------------------------------------------------------------------------
# Incremental rules for the pruned search


class TsoRules(Rules):
    """Graph 0 is ib, graph 1 is ob; ``feed`` keeps ob;[Inst] ⊆ ib and [Inst];ib ⊆ ob."""

    graph_names = ("ib", "ob")
    mo_graph = OB

    def __init__(self, sk: Skeleton):
        self.sk = sk
        self.inst = mask_of(s.id for s in sk.subs if s.kind not in NON_INST)
        self.by_ev: dict[int, dict[str, int]] = {}
        for s in sk.subs:
            self.by_ev.setdefault(s.ev, {})[s.kind] = s.id

    def static_edges(self):
        subs = self.sk.subs
        out = []
        for a in subs:
            for b in subs:
                if a.tid != b.tid or a.pos >= b.pos:
                    continue
                if ippo_tso(a.stamp, b.stamp):
                    out.append(edge(IB, a.id, b.id))
                if oppo_tso(a.stamp, b.stamp):
                    out.append(edge(OB, a.id, b.id))
        for w, p in tso_pf(self.sk.events, subs):
            out.append(edge(IB, w, p))
            if subs[w].kind == "nlW":
                out.append(edge(OB, w, p))
        return out

    def rf_edges(self, w, r):
        out = [edge(IB, w.id, r.id)]
        if not (w.kind == "lW" and r.kind == "lR" and w.tid == r.tid):
            out.append(edge(OB, w.id, r.id))
        return out

    def mo_edges(self, w1, w2):
        return [edge(OB, w1.id, w2.id)]

    def rb_edges(self, r, w):
        out = [edge(OB, r.id, w.id)]
        if r.kind == "lR" and w.kind == "lW" and r.tid == w.tid:
            out.append(edge(IB, r.id, w.id))
        return out

    def nfo_edges(self, a, b):
        return [edge(IB, a.id, b.id), edge(OB, a.id, b.id)]

    def rao_edges(self, r1, r2):
        out = [edge(OB, r1.id, r2.id)]
        w = self.by_ev[r1.ev].get("narW")
        if w is not None:
            out.append(edge(OB, w, r2.id))
        return out

    def feed(self, g, changed):
        if g == IB:
            return [(OB, z, bits) for z, bits in changed if self.inst >> z & 1]
        return [(IB, z, bits & self.inst) for z, bits in changed if bits & self.inst]


# ---------------------------------------------------------------------------
# Verdicts


def search(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND, full: bool = False,
           max_candidates: int | None = None, domain=None):
    if test.dialect != "tso":
        raise ValueError("the declarative tso model needs a tso-dialect test")
    kw = {} if max_candidates is None else {"max_candidates": max_candidates}
    return Search(test, "tso", tso_builder(test), TsoRules, loop_bound, full, domain=domain, **kw).run()


def tso_verdict(test: LitmusTest, model: str = "tso-decl", loop_bound: int = DEFAULT_LOOP_BOUND,
                max_candidates: int | None = None, full: bool = False) -> Verdict:
    """Outcomes of a tso-dialect test under the declarative model."""
    res = search(test, loop_bound, full, max_candidates)
    stats = {"candidates": res.consistent, "search_nodes": res.nodes, "path_combinations": res.combos,
             "time_ms": round(res.time_ms, 1)}
    return judge(test, model, res.outcomes, res.witnesses, stats, res.cut > 0)


__all__ = ["label_variants", "tso_builder", "check_tso", "tso_relations", "TsoRules", "tso_verdict", "search",
           "lock_groups"]
