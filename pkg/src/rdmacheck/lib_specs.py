"""Library specifications: shared variables (brl), the three locks and the SC library.

Each ``library_so`` computes one library's synchronisation order from a
concrete candidate, straight from the set-based definitions.  The per-library
``*_consistent`` predicates check a candidate whose events all belong to that
library (plus any others it composes with) in isolation.
"""

from __future__ import annotations

from .exec_enum import (
    CandidateExecution, base_relations, lock_well_formed, matching_release,
)
from .relations import irreflexive, order_pairs, transitive_closure
from .stamps import Stamp, stamps_of

LOCK_METHODS = {
    "wlock": ("AcqWL", "RelWL"),
    "slock": ("AcqSL", "RelSL"),
    "nlock": ("AcqNL", "RelNL"),
}


def bcast_iso(subs, kinds: dict) -> list[tuple[int, int]]:
    """(nLR_n, nRW_n) pairs of one broadcast event."""
    reads = {subs[i].stamp.node: i for i in kinds.get("nLR", [])}
    writes = {subs[i].stamp.node: i for i in kinds.get("nRW", [])}
    return [(reads[n], writes[n]) for n in reads if n in writes]


def _lib_relations(c: CandidateExecution, lib: str):
    rf, mo, rb = base_relations(c)
    ids = {s.id for s in c.subs if s.lib == lib}
    keep = lambda r: {p for p in r if p[0] in ids and p[1] in ids}
    return ids, keep(rf), keep(mo), keep(rb)


def brl_so(c: CandidateExecution) -> set | None:
    """so of the shared-variable library, or ``None`` if its read constraint fails.

    Per-node copies are separate locations, so rf, mo and rb are already per
    (variable, node).  A CPU read may not read-before a po-earlier write of the
    same copy.
    """
    ids, rf, mo, rb = _lib_relations(c, "brl")
    S = c.subs
    for r, w in rb:
        if S[r].kind == "aCR" and S[w].kind == "aCW" and c.po(S[w], S[r]):
            return None
    rfi = {(w, r) for w, r in rf if S[w].kind == "aCW" and S[r].kind == "aCR" and c.po(S[w], S[r])}
    iso, pf = set(), set()
    by_ev: dict = {}
    for s in S:
        if s.id in ids:
            by_ev.setdefault(s.ev, {}).setdefault(s.kind, []).append(s.id)
    for ev, kinds in by_ev.items():
        if c.events[ev].method == "Bcast":
            iso |= set(bcast_iso(S, kinds))
    for s1 in S:
        e1 = c.events[s1.ev]
        if s1.id not in ids or e1.method != "Bcast" or s1.kind != "nLR" or e1.wid is None:
            continue
        for s2 in S:
            e2 = c.events[s2.ev]
            if e2.method == "BrlWait" and e2.args[0] == e1.wid and c.po(s1, s2):
                pf.add((s1.id, s2.id))
    return iso | (rf - rfi) | pf | rb | mo


def lock_so(c: CandidateExecution, lib: str) -> set:
    """so of one lock library; locks used in an ill-formed way contribute nothing."""
    acq_m, rel_m = LOCK_METHODS[lib]
    S = c.subs
    by_ev: dict = {}
    for s in S:
        by_ev.setdefault(s.ev, {}).setdefault(s.kind, []).append(s.id)
    so = set()
    locks = sorted({e.args[0] for e in c.events if e.method in (acq_m, rel_m)})
    for lock in locks:
        if not lock_well_formed(c.events, lock):
            continue
        if lib == "nlock":
            for e in c.events:
                if e.method == rel_m and e.args[0] == lock:
                    so.add((by_ev[e.id]["nF"][0], by_ev[e.id]["nRW"][0]))
        order = c.lo.get(lock, ())
        for i, a1 in enumerate(order):
            rel = matching_release(c.events, a1)
            if rel is None:
                continue
            src_kind = {"wlock": "aCW", "slock": "gF", "nlock": "nRW"}[lib]
            for a2 in order[i + 1:]:
                for s in by_ev[rel].get(src_kind, []):
                    so.add((s, by_ev[a2]["aMF"][0]))
    return so


def sc_so(c: CandidateExecution) -> set:
    """po ∪ rf ∪ mo ∪ rb over SC-library events."""
    ids, rf, mo, rb = _lib_relations(c, "sc")
    po = {(a.id, b.id) for a in c.subs for b in c.subs if a.id in ids and b.id in ids and c.po(a, b)}
    return po | rf | mo | rb


def library_so(c: CandidateExecution, lib: str) -> set | None:
    if lib == "brl":
        return brl_so(c)
    if lib in LOCK_METHODS:
        return lock_so(c, lib)
    if lib == "sc":
        return sc_so(c)
    raise ValueError(f"unknown library {lib!r}")


# ---------------------------------------------------------------------------
# Per-library predicates


def _well_stamped(c: CandidateExecution, lib: str) -> bool:
    by_ev: dict = {}
    for s in c.subs:
        if s.lib == lib:
            by_ev.setdefault(s.ev, set()).add(s.stamp)
    for ev, stamps in by_ev.items():
        e = c.events[ev]
        node_of = _node_of_lock(c, e)
        if frozenset(stamps) not in stamps_of(e.method, e.args, thread_node=0, node_of=node_of, nodes=c.nodes):
            return False
    return True


def _node_of_lock(c: CandidateExecution, e):
    nodes = {s.stamp.node for s in c.subs if s.ev == e.id and s.stamp.node is not None}
    node = min(nodes) if nodes else 1
    return lambda name: node


def _lib_consistent(c: CandidateExecution, lib: str) -> bool:
    so = library_so(c, lib)
    if so is None:
        return False
    ppo = _ppo(c)
    return irreflexive(transitive_closure(so | ppo))


def _ppo(c: CandidateExecution) -> set:
    from .stamps import sto

    return {(a.id, b.id) for a in c.subs for b in c.subs if c.po(a, b) and sto(a.stamp, b.stamp)}


def wlock_consistent(c: CandidateExecution) -> bool:
    return _well_stamped(c, "wlock") and _lib_consistent(c, "wlock")


def slock_consistent(c: CandidateExecution) -> bool:
    return _well_stamped(c, "slock") and _lib_consistent(c, "slock")


def nlock_consistent(c: CandidateExecution) -> bool:
    return _well_stamped(c, "nlock") and _lib_consistent(c, "nlock")


def brl_consistent(c: CandidateExecution) -> bool:
    return _lib_consistent(c, "brl")


def strl_consistent(c: CandidateExecution) -> bool:
    if any(s.stamp != Stamp("aMF") for s in c.subs if s.lib == "sc"):
        return False
    return _lib_consistent(c, "sc")


__all__ = [
    "lock_well_formed", "wlock_consistent", "slock_consistent", "nlock_consistent", "brl_consistent",
    "strl_consistent", "library_so", "bcast_iso",
]
