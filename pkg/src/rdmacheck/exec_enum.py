"""Candidate executions: concrete subevents, witness relations and derived relations.

Two producers build :class:`CandidateExecution` values:

* :func:`enumerate_candidates` is the brute-force generator.  It takes one
  concrete plain execution and yields every well-formed choice of rf, mo, nfo,
  rao and lo without any consistency pruning.
* :mod:`rdmacheck.engine` runs the pruned symbolic search used for verdicts.

Both share the witness domains defined here (which subevents need an nfo
orientation, which remote atomics rao orders, which acquires a lock orders).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .litmus import DEFAULT_LOOP_BOUND, LitmusTest, PlainExecution, outcome_keys, registers_of, unfold
from .relations import compose, inverse, order_pairs, transitive_closure
from .stamps import Stamp, Variant, const_key, method_variants, sto

WAIT_LIB = "wait"
NIC_WRITES = ("nLW", "nRW")


@dataclass(frozen=True)
class CEvent:
    """A method call in a candidate: thread, po position and concrete arguments."""

    id: int
    tid: int
    pos: int
    method: str
    args: tuple
    wid: str | None = None
    op_id: int | None = None  # identifier returned by a remote operation (tso dialect)
    polled: int | None = None  # identifier a poll returned (tso dialect)


@dataclass(frozen=True)
class SubEvent:
    """An (event, stamp) pair with its location and the values it reads/writes.

    For tso-dialect candidates each label is its own subevent with its own po
    position; ``ev`` groups the labels of one instruction.
    """

    id: int
    ev: int
    tid: int
    pos: int
    stamp: Stamp
    lib: str
    loc: object = None
    rval: int | None = None
    wval: int | None = None

    @property
    def kind(self) -> str:
        return self.stamp.kind

    @property
    def is_read(self) -> bool:
        return self.rval is not None

    @property
    def is_write(self) -> bool:
        return self.wval is not None


@dataclass
class CandidateExecution:
    """Events, subevents and one choice of every existential witness."""

    dialect: str  # "wait" (WAIT model and libraries) or "tso"
    events: tuple[CEvent, ...]
    subs: tuple[SubEvent, ...]
    init: dict  # location key -> initial value
    regs: dict  # "thread.reg" -> final value
    rf: dict = field(default_factory=dict)  # read subevent -> write subevent (absent: initial value)
    mo: dict = field(default_factory=dict)  # location key -> write subevents, oldest first
    nfo: frozenset = frozenset()
    rao: dict = field(default_factory=dict)  # node -> remote atomic reads in order
    pf: frozenset = frozenset()  # NIC write -> poll (tso dialect)
    lo: dict = field(default_factory=dict)  # lock -> acquire events in order
    nodes: int = 1

    # -- convenience --------------------------------------------------------
    def po(self, a: SubEvent, b: SubEvent) -> bool:
        return a.tid == b.tid and a.pos < b.pos

    def reads(self, loc=None) -> list[SubEvent]:
        return [s for s in self.subs if s.is_read and (loc is None or s.loc == loc)]

    def writes(self, loc=None) -> list[SubEvent]:
        return [s for s in self.subs if s.is_write and (loc is None or s.loc == loc)]

    def final_memory(self) -> dict:
        mem = dict(self.init)
        for loc, order in self.mo.items():
            if order:
                mem[loc] = self.subs[order[-1]].wval
        return mem


# ---------------------------------------------------------------------------
# Outcomes


def outcome_of(test: LitmusTest, regs: dict, memory: dict) -> tuple:
    """Final outcome as a sorted tuple of ``(key, value)`` pairs."""
    out = {}
    for key in outcome_keys(test):
        if "." in key:
            out[key] = regs.get(key, 0)
        elif "@" in key:
            name, node = key.split("@")
            out[key] = memory.get(("brl", name, int(node)), _init_of(test, key))
        elif any(l.name == key for l in test.sc):
            out[key] = memory.get(("sc", key), _init_of(test, key))
        else:
            out[key] = memory.get(key, _init_of(test, key))
    return tuple(sorted(out.items()))


def _init_of(test: LitmusTest, key: str) -> int:
    name = key.split("@")[0]
    for l in test.locs + test.sc + test.brl:
        if l.name == name:
            return l.init
    return 0


def initial_values(test: LitmusTest) -> dict:
    init = {l.name: l.init for l in test.locs}
    init.update({("sc", l.name): l.init for l in test.sc})
    for l in test.brl:
        for n in range(1, test.nodes + 1):
            init[("brl", l.name, n)] = l.init
    return init


def init_value(init: dict, loc):
    """Initial value of a location key; constant-source keys hold their constant."""
    if isinstance(loc, tuple) and loc and loc[0] == "#k":
        return loc[1]
    return init.get(loc, 0)


# ---------------------------------------------------------------------------
# Builders from method calls to subevents


Builder = Callable[[str, tuple, int], list[Variant]]


def wait_builder(test: LitmusTest) -> Builder:
    """Stamp assignment for WAIT-dialect and library methods."""

    def node_of(name):
        return test.node_of(name)

    def build(method: str, args: tuple, thread_node: int) -> list[Variant]:
        return method_variants(method, args, thread_node, node_of, test.nodes)

    return build


def wid_of(method: str, args: tuple) -> str | None:
    if method in ("Put", "Get", "RCAS", "RFAA"):
        return args[-1]
    if method == "Bcast":
        return args[1]
    if method in ("Wait", "BrlWait"):
        return args[0]
    return None


def lib_of(method: str) -> str:
    from .stamps import LIB_OF_METHOD

    return LIB_OF_METHOD.get(method, WAIT_LIB)


def build_subevents(test: LitmusTest, plain: PlainExecution, builder: Builder,
                    sequential: bool) -> tuple[tuple[CEvent, ...], tuple[SubEvent, ...]] | None:
    """Concrete subevents of a plain execution; ``None`` if no variant fits its read values."""
    events, subs = [], []
    pos = {}
    for e in plain.events:
        t = test.threads[e.tid]
        variants = [v for v in builder(e.method, e.args, t.node) if _cond_holds(v, e.reads)]
        if not variants:
            return None
        (v,) = variants
        p = pos.get(e.tid, 0)
        ce = CEvent(len(events), e.tid, p, e.method, e.args, wid_of(e.method, e.args),
                    e.output if e.method != "Poll" and e.method in _OP_METHODS else None,
                    e.output if e.method == "Poll" else None)
        events.append(ce)
        for i, sp in enumerate(v.subs):
            rval = e.reads[sp.read] if sp.read is not None else None
            wval = None
            if sp.write is not None:
                base = e.reads[sp.write.src] if sp.write.src is not None else 0
                wval = base + sp.write.add
            subs.append(SubEvent(len(subs), ce.id, e.tid, p + (i if sequential else 0), sp.stamp,
                                 lib_of(e.method), sp.loc, rval, wval))
        pos[e.tid] = p + (len(v.subs) if sequential else 1)
    return tuple(events), tuple(subs)


_OP_METHODS = ("Put", "Get", "RCAS", "RFAA")


def _cond_holds(v: Variant, reads: Sequence[int]) -> bool:
    if v.cond is None:
        return True
    op, idx, val = v.cond
    return (reads[idx] == val) == (op == "==")


# ---------------------------------------------------------------------------
# Witness domains shared by the brute-force and the pruned search


def sqp(a: SubEvent, b: SubEvent) -> bool:
    """Same queue pair: same thread and same remote node."""
    return a.tid == b.tid and a.stamp.node is not None and a.stamp.node == b.stamp.node


def nfo_pairs(subs: Sequence[SubEvent], dialect: str) -> list[tuple[int, int]]:
    """Pairs that need an nfo orientation, as (read, write) subevent ids."""
    if dialect == "tso":
        local = (("nlR",), ("nlW",))
        remote = (("nrR", "narR"), ("nrW", "narW"))
        lib = None
    else:
        local = (("nLR",), ("nLW",))
        remote = (("nRR", "naRR"), ("nRW",))
        lib = WAIT_LIB
    out = []
    for a in subs:
        for b in subs:
            if a is b or (lib is not None and (a.lib != lib or b.lib != lib)) or not sqp(a, b):
                continue
            for reads, writes in (local, remote):
                if a.kind in reads and b.kind in writes:
                    out.append((a.id, b.id))
    return out


def rao_groups(subs: Sequence[SubEvent], dialect: str) -> dict[int, list[int]]:
    kind = "narR" if dialect == "tso" else "naRR"
    groups: dict[int, list[int]] = {}
    for s in subs:
        if s.kind == kind and (dialect == "tso" or s.lib == WAIT_LIB):
            groups.setdefault(s.stamp.node, []).append(s.id)
    return groups


LOCK_LIBS = {"wlock": ("AcqWL", "RelWL"), "slock": ("AcqSL", "RelSL"), "nlock": ("AcqNL", "RelNL")}


def lock_well_formed(events: Sequence[CEvent], lock: str | None = None) -> bool:
    """Per thread and lock, calls alternate acquire/release, starting with an
    acquire and ending with a release."""
    per: dict = {}
    for e in events:
        if e.method.startswith(("Acq", "Rel")) and (lock is None or e.args[0] == lock):
            per.setdefault((e.tid, e.args[0]), []).append(e)
    for seq in per.values():
        seq.sort(key=lambda e: e.pos)
        for i, e in enumerate(seq):
            if e.method.startswith("Acq") != (i % 2 == 0):
                return False
        if len(seq) % 2:
            return False
    return True


def lock_groups(events: Sequence[CEvent]) -> dict[str, list[int]]:
    """Acquire events per lock, for the locks whose calls are well formed."""
    groups: dict[str, list[int]] = {}
    for e in events:
        if e.method.startswith("Acq"):
            groups.setdefault(e.args[0], []).append(e.id)
    return {l: acqs for l, acqs in groups.items() if lock_well_formed(events, l)}


def matching_release(events: Sequence[CEvent], acq: int) -> int | None:
    """The release immediately following an acquire in po restricted to its lock."""
    a = events[acq]
    later = [e for e in events if e.tid == a.tid and e.pos > a.pos and e.args[:1] == a.args[:1]
             and e.method.startswith(("Acq", "Rel"))]
    later.sort(key=lambda e: e.pos)
    if later and later[0].method.startswith("Rel"):
        return later[0].id
    return None


def tso_pf(events: Sequence[CEvent], subs: Sequence[SubEvent]) -> frozenset:
    """Static polls-from: each poll is matched with the NIC write of the operation it returned."""
    by_op = {}
    for s in subs:
        e = events[s.ev]
        if e.op_id is None:
            continue
        if (e.method == "Put" and s.kind == "nrW") or (e.method != "Put" and s.kind == "nlW"):
            by_op[e.op_id] = s.id
    out = set()
    for s in subs:
        if s.kind == "P":
            out.add((by_op[events[s.ev].polled], s.id))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Brute-force enumeration


def enumerate_candidates(test: LitmusTest, plain: PlainExecution, dialect: str,
                         builder: Builder | None = None) -> Iterator[CandidateExecution]:
    """Every well-formed candidate of one plain execution, without pruning.

    rf respects locations and values and reads with no rf source return the
    initial value; mo is every permutation of each location's writes; every
    nfo pair gets each orientation; rao and lo range over all permutations.
    """
    if builder is None:
        if dialect == "tso":
            from .tso_decl import tso_builder

            builder = tso_builder(test)
        else:
            builder = wait_builder(test)
    built = build_subevents(test, plain, builder, sequential=dialect == "tso")
    if built is None:
        return
    events, subs = built
    init = initial_values(test)
    regs = dict(plain.final_regs)
    reads = [s for s in subs if s.is_read]
    rf_choices = []
    for r in reads:
        opts = [None] if init_value(init, r.loc) == r.rval else []
        opts += [w.id for w in subs if w.is_write and w.loc == r.loc and w.id != r.id and w.wval == r.rval]
        rf_choices.append(opts)
    locs = sorted({s.loc for s in subs if s.is_write}, key=repr)
    mo_choices = [list(itertools.permutations([s.id for s in subs if s.is_write and s.loc == l])) for l in locs]
    pairs = nfo_pairs(subs, dialect)
    rao = rao_groups(subs, dialect)
    rao_nodes = sorted(rao)
    locks = lock_groups(events) if dialect != "tso" else {}
    lock_names = sorted(locks)
    pf = tso_pf(events, subs) if dialect == "tso" else frozenset()
    for rf_pick in itertools.product(*rf_choices):
        rf = {r.id: w for r, w in zip(reads, rf_pick) if w is not None}
        for mo_pick in itertools.product(*mo_choices):
            mo = dict(zip(locs, mo_pick))
            for orient in itertools.product((False, True), repeat=len(pairs)):
                nfo = frozenset((b, a) if flip else (a, b) for (a, b), flip in zip(pairs, orient))
                for rao_pick in itertools.product(*(itertools.permutations(rao[n]) for n in rao_nodes)):
                    for lo_pick in itertools.product(*(itertools.permutations(locks[l]) for l in lock_names)):
                        yield CandidateExecution(
                            dialect, events, subs, init, regs, rf, mo, nfo,
                            dict(zip(rao_nodes, rao_pick)), pf, dict(zip(lock_names, lo_pick)), test.nodes)


def brute_force_outcomes(test: LitmusTest, dialect: str, consistent: Callable[[CandidateExecution], bool],
                         loop_bound: int = DEFAULT_LOOP_BOUND, domain: Sequence[int] | None = None,
                         builder: Builder | None = None) -> set:
    """Outcome set by exhaustive enumeration: the unpruned oracle for the search."""
    out = set()
    for plain in unfold(test, loop_bound, domain):
        for c in enumerate_candidates(test, plain, dialect, builder):
            if consistent(c):
                out.add(outcome_of(test, c.regs, c.final_memory()))
    return out


# ---------------------------------------------------------------------------
# Derived relations of the WAIT model (set based, straight from the definitions)


@dataclass
class DerivedRelations:
    rb: set
    rfi: set
    rfe: set
    fri: set
    iso: set
    pfg: set
    pfp: set
    ppo: set
    ippo: set
    ib: set
    so: set
    hb: set
    inst: set


def base_relations(c: CandidateExecution) -> tuple[set, set, set]:
    """rf, mo and rb as sets of subevent-id pairs."""
    rf = {(w, r) for r, w in c.rf.items()}
    mo = set()
    for order in c.mo.values():
        mo |= order_pairs(order)
    rb = set()
    for r in c.reads():
        src = c.rf.get(r.id)
        for w in c.writes(r.loc):
            if w.id == r.id:
                continue
            if src is None or (src, w.id) in mo:
                rb.add((r.id, w.id))
    return rf, mo, rb


def derive(c: CandidateExecution) -> DerivedRelations:
    """The derived relations of the WAIT model, restricted to WAIT subevents
    (``ppo`` is computed over all subevents since it crosses libraries)."""
    S = c.subs
    wait = {s.id for s in S if s.lib == WAIT_LIB}
    rf, mo, rb = base_relations(c)
    rf = {p for p in rf if p[0] in wait}
    mo = {p for p in mo if p[0] in wait}
    rb = {p for p in rb if p[0] in wait}
    po = {(a.id, b.id) for a in S for b in S if c.po(a, b)}
    kind = {s.id: s.kind for s in S}
    rfi = {(w, r) for w, r in rf if kind[w] == "aCW" and kind[r] == "aCR" and (w, r) in po}
    rfe = rf - rfi
    fri = {(r, w) for r, w in rb if kind[r] == "aCR" and kind[w] == "aCW" and ((r, w) in po or (w, r) in po)}
    iso = set()
    by_ev: dict = {}
    for s in S:
        if s.id in wait:
            by_ev.setdefault(s.ev, {})[s.kind] = s.id
    for ev, m in by_ev.items():
        method = c.events[ev].method
        if method == "CAS" and "aMF" in m and "aCR" in m:
            iso.add((m["aMF"], m["aCR"]))
        if method == "Get":
            iso.add((m["nRR"], m["nLW"]))
        if method == "Put":
            iso.add((m["nLR"], m["nRW"]))
        if method in ("RCAS", "RFAA"):
            iso.add((m["naRR"], m["nLW"]))
            if "nRW" in m:
                iso.add((m["naRR"], m["nRW"]))
    pfg, pfp = set(), set()
    for s1 in S:
        if s1.id not in wait or s1.kind not in NIC_WRITES:
            continue
        d = c.events[s1.ev].wid
        if d is None:
            continue
        for s2 in S:
            e2 = c.events[s2.ev]
            if s2.kind == "aWT" and e2.method == "Wait" and e2.args[0] == d and c.po(s1, s2):
                (pfg if s1.kind == "nLW" else pfp).add((s1.id, s2.id))
    ppo = {(a.id, b.id) for a in S for b in S if c.po(a, b) and sto(a.stamp, b.stamp)}
    ippo = {p for p in ppo if p[0] in wait and p[1] in wait}
    for a in S:
        for b in S:
            if a.id in wait and b.id in wait and c.po(a, b):
                if a.kind == "aCW" and b.kind in ("aCR", "aWT"):
                    ippo.add((a.id, b.id))
                if a.kind in NIC_WRITES and b.kind == "nF" and a.stamp.node == b.stamp.node:
                    ippo.add((a.id, b.id))
    nfo = set(c.nfo)
    ib = transitive_closure(ippo | iso | rf | pfg | pfp | nfo | fri)
    inst = {s for s in wait if kind[s] not in ("aCW", "nLW", "nRW")}
    rao = set()
    for node, order in c.rao.items():
        rao |= order_pairs(order)
    nrw = {s for s in wait if kind[s] == "nRW"}
    rao_ext = {(w, r2) for (w, r) in inverse(iso) if w in nrw for (r1, r2) in rao if r1 == r}
    so = iso | rfe | pfg | nfo | rb | mo | rao | rao_ext | {(a, b) for a, b in ib if a in inst}
    hb = transitive_closure(so | ppo)
    return DerivedRelations(rb, rfi, rfe, fri, iso, pfg, pfp, ppo, ippo, ib, so, hb, inst)


# ---------------------------------------------------------------------------
# Graph dump


def dump_graph(c: CandidateExecution, relations: dict[str, set] | None = None) -> str:
    """Deterministic text rendering: the subevents, then one section per relation."""
    lines = ["[subevents]"]
    for s in c.subs:
        e = c.events[s.ev]
        vals = []
        if s.rval is not None:
            vals.append(f"r={s.rval}")
        if s.wval is not None:
            vals.append(f"w={s.wval}")
        loc = "" if s.loc is None else f" {_loc_text(s.loc)}"
        lines.append(f"s{s.id} t{s.tid} e{e.id}:{e.method} {s.stamp}{loc} {' '.join(vals)}".rstrip())
    rels = {"rf": {(w, r) for r, w in c.rf.items()}}
    mo = set()
    for order in c.mo.values():
        mo |= order_pairs(order)
    rels["mo"] = mo
    rels["nfo"] = set(c.nfo)
    rao = set()
    for order in c.rao.values():
        rao |= order_pairs(order)
    rels["rao"] = rao
    if c.pf:
        rels["pf"] = set(c.pf)
    rels.update(relations or {})
    for name in rels:
        lines.append(f"[{name}]")
        lines += [f"s{a} -> s{b}" for a, b in sorted(rels[name])]
    if c.lo:
        lines.append("[lo]")
        for lock, order in sorted(c.lo.items()):
            lines.append(f"{lock}: " + " < ".join(f"e{e}" for e in order))
    return "\n".join(lines) + "\n"


def _loc_text(loc) -> str:
    if isinstance(loc, tuple):
        if loc[0] == "brl":
            return f"{loc[1]}@{loc[2]}"
        if loc[0] == "sc":
            return loc[1]
        if loc[0] == "#k":
            return f"#{loc[1]}"
    return str(loc)


def all_registers(test: LitmusTest) -> list[str]:
    return [f"{t.name}.{r}" for t in test.threads for r in registers_of(t)]


__all__ = [
    "CEvent", "SubEvent", "CandidateExecution", "DerivedRelations", "enumerate_candidates",
    "derive", "dump_graph", "outcome_of", "nfo_pairs", "rao_groups", "lock_groups",
    "lock_well_formed", "matching_release", "tso_pf", "build_subevents", "wait_builder",
    "initial_values", "init_value", "base_relations", "compose",
]
