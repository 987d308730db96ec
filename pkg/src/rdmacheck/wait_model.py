"""WAIT-model consistency and its composition with the library specifications.

``check_wait`` and ``check_composed`` decide consistency of one concrete
candidate straight from the set-based definitions.  ``verdict`` runs the pruned
search of :mod:`rdmacheck.engine` with :class:`WaitRules`, which encodes the
same definitions as incremental edge additions.
"""

from __future__ import annotations

from typing import Sequence

from . import lib_specs
from .engine import Rules, Search, Skeleton, edge
from .exec_enum import (
    WAIT_LIB, CandidateExecution, DerivedRelations, derive, lock_groups, matching_release, nfo_pairs,
    rao_groups, wait_builder,
)
from .litmus import DEFAULT_LOOP_BOUND, LitmusTest
from .relations import irreflexive, mask_of, transitive_closure
from .report import Verdict, judge
from .stamps import sto

LIBRARIES = ("wait", "brl", "wlock", "slock", "nlock", "sc")
IB, HB = 0, 1


# ---------------------------------------------------------------------------
# From-scratch checks


def check_wait(c: CandidateExecution, d: DerivedRelations | None = None) -> bool:
    """WAIT consistency of a candidate whose events all belong to the WAIT library."""
    return check_composed(c, ["wait"], d)


def check_composed(c: CandidateExecution, libraries: Sequence[str] = LIBRARIES,
                   d: DerivedRelations | None = None) -> bool:
    """Consistency of the composition: each library's restriction is consistent,
    so is the union of the library so's, and hb = (so ∪ ppo)⁺ is irreflexive."""
    for s in c.subs:
        if s.lib not in libraries:
            raise ValueError(f"event {c.events[s.ev].method} belongs to no listed library")
    if not well_formed(c):
        return False
    d = d or derive(c)
    if not irreflexive(d.ib):
        return False
    so = set(d.so)
    for lib in ("brl", "wlock", "slock", "nlock", "sc"):
        if lib not in libraries:
            continue
        lib_so = lib_specs.library_so(c, lib)
        if lib_so is None:
            return False
        so |= lib_so
    return irreflexive(transitive_closure(so | d.ppo))


def well_formed(c: CandidateExecution) -> bool:
    """The witness tuple is well formed: rf matches locations and values, reads
    without a source see the initial value, mo/rao/lo are total orders on the
    right sets and every nfo pair is oriented exactly once."""
    from .exec_enum import init_value

    subs = c.subs
    for r in c.reads():
        w = c.rf.get(r.id)
        if w is None:
            if r.rval != init_value(c.init, r.loc):
                return False
        elif not (subs[w].is_write and subs[w].loc == r.loc and subs[w].wval == r.rval and w != r.id):
            return False
    locs = {s.loc for s in c.writes()}
    if set(c.mo) != locs:
        return False
    for loc in locs:
        if sorted(c.mo[loc]) != sorted(s.id for s in c.writes(loc)):
            return False
    groups = rao_groups(subs, c.dialect)
    if {n: sorted(v) for n, v in c.rao.items()} != {n: sorted(v) for n, v in groups.items()}:
        return False
    pairs = nfo_pairs(subs, c.dialect)
    for a, b in pairs:
        if ((a, b) in c.nfo) == ((b, a) in c.nfo):
            return False
    if len(c.nfo) != len(pairs):
        return False
    if c.dialect != "tso":
        locks = lock_groups(c.events)
        if {l: sorted(v) for l, v in c.lo.items()} != {l: sorted(v) for l, v in locks.items()}:
            return False
    return True


# ---------------------------------------------------------------------------
# Incremental rules for the pruned search


class WaitRules(Rules):
    """Graph 0 is the WAIT ib; graph 1 is hb, fed by so edges of every library and ppo."""

    graph_names = ("ib", "hb")
    mo_graph = HB

    def __init__(self, sk: Skeleton):
        self.sk = sk
        subs = sk.subs
        self.inst = mask_of(s.id for s in subs if s.lib == WAIT_LIB and s.kind not in ("aCW", "nLW", "nRW"))
        self.by_ev: dict[int, dict[str, list[int]]] = {}
        for s in subs:
            self.by_ev.setdefault(s.ev, {}).setdefault(s.kind, []).append(s.id)
        self.locks = lock_groups(sk.events)

    def static_edges(self):
        sk, subs, events = self.sk, self.sk.subs, self.sk.events
        out = []
        by_tid: dict[int, list] = {}
        for s in subs:
            by_tid.setdefault(s.tid, []).append(s)
        for ss in by_tid.values():
            for a in ss:
                for b in ss:
                    if a.pos >= b.pos:
                        continue
                    both_wait = a.lib == WAIT_LIB and b.lib == WAIT_LIB
                    if sto(a.stamp, b.stamp):
                        out.append(edge(HB, a.id, b.id))
                        if both_wait:
                            out.append(edge(IB, a.id, b.id))
                    if both_wait and (
                            (a.kind == "aCW" and b.kind in ("aCR", "aWT"))
                            or (a.kind in ("nRW", "nLW") and b.kind == "nF" and a.stamp.node == b.stamp.node)):
                        out.append(edge(IB, a.id, b.id))
                    if a.lib == "sc" and b.lib == "sc":
                        out.append(edge(HB, a.id, b.id))
        for ev, kinds in self.by_ev.items():
            e = events[ev]
            one = lambda k: kinds[k][0]
            if e.method == "CAS" and "aCR" in kinds and "aMF" in kinds:
                out += [edge(IB, one("aMF"), one("aCR")), edge(HB, one("aMF"), one("aCR"))]
            elif e.method == "Get":
                out += [edge(IB, one("nRR"), one("nLW")), edge(HB, one("nRR"), one("nLW"))]
            elif e.method == "Put":
                out += [edge(IB, one("nLR"), one("nRW")), edge(HB, one("nLR"), one("nRW"))]
            elif e.method in ("RCAS", "RFAA"):
                out += [edge(IB, one("naRR"), one("nLW")), edge(HB, one("naRR"), one("nLW"))]
                if "nRW" in kinds:
                    out += [edge(IB, one("naRR"), one("nRW")), edge(HB, one("naRR"), one("nRW"))]
            elif e.method == "Bcast":
                out += [edge(HB, a, b) for a, b in lib_specs.bcast_iso(subs, kinds)]
            elif e.method == "RelNL" and e.args[0] in self.locks:
                out.append(edge(HB, one("nF"), one("nRW")))
        # pfg / pfp and the shared-variable library's pf
        for s1 in subs:
            e1 = events[s1.ev]
            if e1.wid is None or s1.kind not in ("nLW", "nRW", "nLR"):
                continue
            for s2 in subs:
                e2 = events[s2.ev]
                if s2.kind != "aWT" or not sk.po(s1, s2) or e2.args[0] != e1.wid:
                    continue
                if e1.method in ("Get", "Put", "RCAS", "RFAA") and e2.method == "Wait":
                    if s1.kind == "nLW":
                        out += [edge(IB, s1.id, s2.id), edge(HB, s1.id, s2.id)]
                    elif s1.kind == "nRW":
                        out.append(edge(IB, s1.id, s2.id))
                elif e1.method == "Bcast" and e2.method == "BrlWait" and s1.kind == "nLR":
                    out.append(edge(HB, s1.id, s2.id))
        return out

    def rf_edges(self, w, r):
        if w.lib == WAIT_LIB:
            out = [edge(IB, w.id, r.id)]
            if not (w.kind == "aCW" and r.kind == "aCR" and self.sk.po(w, r)):
                out.append(edge(HB, w.id, r.id))
            return out
        if w.lib == "brl":
            if w.kind == "aCW" and r.kind == "aCR" and self.sk.po(w, r):
                return []
            return [edge(HB, w.id, r.id)]
        return [edge(HB, w.id, r.id)]

    def mo_edges(self, w1, w2):
        return [edge(HB, w1.id, w2.id)]

    def rb_edges(self, r, w):
        if w.lib == "brl" and r.kind == "aCR" and w.kind == "aCW" and self.sk.po(w, r):
            return None
        out = [edge(HB, r.id, w.id)]
        if (w.lib == WAIT_LIB and r.kind == "aCR" and w.kind == "aCW" and r.tid == w.tid
                and r.pos != w.pos):
            out.append(edge(IB, r.id, w.id))
        return out

    def nfo_edges(self, a, b):
        return [edge(IB, a.id, b.id), edge(HB, a.id, b.id)]

    def rao_edges(self, r1, r2):
        out = [edge(HB, r1.id, r2.id)]
        nrw = self.by_ev[r1.ev].get("nRW")
        if nrw:
            out.append(edge(HB, nrw[0], r2.id))
        return out

    def lo_edges(self, lock, a1, a2):
        rel = matching_release(self.sk.events, a1)
        if rel is None:  # pragma: no cover - excluded by well-formedness
            return []
        target = self.by_ev[a2]["aMF"][0]
        kinds = self.by_ev[rel]
        method = self.sk.events[rel].method
        srcs = {"RelWL": kinds.get("aCW", []), "RelSL": kinds.get("gF", []),
                "RelNL": kinds.get("nRW", [])}[method]
        return [edge(HB, s, target) for s in srcs]

    def feed(self, g, changed):
        if g != IB:
            return []
        return [(HB, z, bits) for z, bits in changed if self.inst >> z & 1]


# ---------------------------------------------------------------------------
# Verdicts


def search(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND, full: bool = False,
           max_candidates: int | None = None, domain=None):
    kw = {} if max_candidates is None else {"max_candidates": max_candidates}
    return Search(test, "wait", wait_builder(test), WaitRules, loop_bound, full, domain=domain, **kw).run()


def verdict(test: LitmusTest, model: str = "wait", loop_bound: int = DEFAULT_LOOP_BOUND,
            max_candidates: int | None = None, full: bool = False) -> Verdict:
    """Outcomes of a WAIT- or library-dialect test under the composed model."""
    if test.dialect == "tso":
        raise ValueError("tso-dialect tests need a tso model")
    res = search(test, loop_bound, full, max_candidates)
    stats = {"candidates": res.consistent, "search_nodes": res.nodes, "path_combinations": res.combos,
             "time_ms": round(res.time_ms, 1)}
    return judge(test, model, res.outcomes, res.witnesses, stats, res.cut > 0)
