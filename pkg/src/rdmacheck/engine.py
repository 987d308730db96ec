"""Pruned symbolic search for consistent candidate executions.

Threads are first run symbolically: every read part of a call gets a fresh
variable, values are ``variable + offset`` terms (:class:`Lin`), and
conditions over unknown values split a path into disjoint branches that carry
their constraints (:class:`Atom`).  For each combination of thread paths the
search then picks, in order, an rf source for every read (binding variables
with a union-find), a modification order per location, nfo orientations, rao
orders and lock orders.  Edges are added to incrementally closed relations as
soon as they are known, and a branch is abandoned the moment one of them
becomes cyclic.

What the edges mean is decided by a model-specific rules object (see
:mod:`rdmacheck.wait_model` and :mod:`rdmacheck.tso_decl`).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Sequence

from . import litmus as L
from .exec_enum import (
    CandidateExecution, CEvent, SubEvent, initial_values, init_value, lib_of, lock_groups,
    nfo_pairs, outcome_of, rao_groups, tso_pf, wid_of,
)
from .litmus import LitmusError, LitmusTest
from .relations import Closure, Cycle, bits_of
from .stamps import Variant, const_key

DEFAULT_MAX_CANDIDATES = 10 ** 7


class ResourceLimit(Exception):
    """A search or exploration exceeded its configured cap."""


# ---------------------------------------------------------------------------
# Symbolic values


@dataclass(frozen=True)
class Lin:
    """``value(var) + off``, or the constant ``off`` when ``var`` is None."""

    var: object = None
    off: int = 0

    def plus(self, k: int) -> "Lin":
        return Lin(self.var, self.off + k)

    def __repr__(self) -> str:
        if self.var is None:
            return str(self.off)
        return f"v{self.var}" + (f"{self.off:+d}" if self.off else "")


def as_lin(v) -> Lin:
    return v if isinstance(v, Lin) else Lin(None, int(v))


@dataclass(frozen=True)
class Atom:
    a: Lin
    op: str  # "==" or "!="
    b: Lin


class Binding:
    """Union-find with offsets over read variables, some roots bound to constants."""

    __slots__ = ("parent", "const")

    def __init__(self, parent=None, const=None):
        self.parent = parent if parent is not None else {}
        self.const = const if const is not None else {}

    def copy(self) -> "Binding":
        return Binding(dict(self.parent), dict(self.const))

    def find(self, v):
        off = 0
        while v in self.parent:
            v, o = self.parent[v]
            off += o
        return v, off

    def resolve(self, l: Lin):
        """``(None, value)`` if known, else ``(root, offset)``."""
        if l.var is None:
            return None, l.off
        r, o = self.find(l.var)
        if r in self.const:
            return None, self.const[r] + o + l.off
        return r, o + l.off

    def unify(self, a: Lin, b: Lin) -> bool:
        ra, oa = self.resolve(a)
        rb, ob = self.resolve(b)
        if ra is None and rb is None:
            return oa == ob
        if ra is None:
            ra, oa, rb, ob = rb, ob, ra, oa
        if rb is None:
            self.const[ra] = ob - oa
            return True
        if ra == rb:
            return oa == ob
        self.parent[ra] = (rb, ob - oa)
        return True

    def holds(self, atom: Atom) -> bool | None:
        ra, oa = self.resolve(atom.a)
        rb, ob = self.resolve(atom.b)
        if ra == rb:
            return (oa == ob) == (atom.op == "==")
        return None

    def value(self, l) -> int:
        if not isinstance(l, Lin):
            return l
        r, o = self.resolve(l)
        if r is not None:
            raise ValueError(f"unbound variable in {l}")
        return o


def atoms_consistent(atoms: Iterable[Atom]) -> bool:
    """Cheap satisfiability check: equalities by unification, then disequalities."""
    b = Binding()
    neq = []
    for at in atoms:
        if at.op == "==":
            if not b.unify(at.a, at.b):
                return False
        else:
            neq.append(at)
    return all(b.holds(at) is not False for at in neq)


# ---------------------------------------------------------------------------
# Symbolic per-thread paths


@dataclass(frozen=True)
class PathEvent:
    method: str
    args: tuple
    variant: Variant
    rvars: tuple
    op_id: int | None = None
    polled: int | None = None


@dataclass(frozen=True)
class ThreadPath:
    events: tuple[PathEvent, ...]
    atoms: tuple[Atom, ...]
    regs: tuple[tuple[str, Lin], ...]


@dataclass
class PathStats:
    cut: int = 0  # paths dropped because a while loop hit the bound


@dataclass(frozen=True)
class _While:
    loop: L.While
    left: int


def _lin_eval(e, env) -> Lin:
    if isinstance(e, L.Const):
        return Lin(None, e.value)
    if isinstance(e, L.Var):
        v = env.get(e.name, Lin(None, 0))
        return v
    if isinstance(e, L.BinOp) and e.op in ("+", "-"):
        a, b = _lin_eval(e.left, env), _lin_eval(e.right, env)
        sign = 1 if e.op == "+" else -1
        if b.var is None:
            return Lin(a.var, a.off + sign * b.off)
        if a.var is None and sign == 1:
            return Lin(b.var, a.off + b.off)
        raise LitmusError("only 'value + constant' arithmetic is supported on read values")
    raise LitmusError(f"not a value expression: {L.pretty_expr(e)}")


def split_cond(e, env, want: bool) -> list[tuple[Atom, ...]]:
    """Disjoint constraint sets under which ``e`` evaluates to ``want``."""
    if isinstance(e, L.Not):
        return split_cond(e.arg, env, not want)
    if isinstance(e, L.SetEmpty):
        empty = not env.get(("set", e.name), ())
        return [()] if empty == want else []
    if isinstance(e, L.BinOp) and e.op == "&&":
        if want:
            return [l + r for l in split_cond(e.left, env, True) for r in split_cond(e.right, env, True)]
        return split_cond(e.left, env, False) + [
            l + r for l in split_cond(e.left, env, True) for r in split_cond(e.right, env, False)]
    if isinstance(e, L.BinOp) and e.op == "||":
        if not want:
            return [l + r for l in split_cond(e.left, env, False) for r in split_cond(e.right, env, False)]
        return split_cond(e.left, env, True) + [
            l + r for l in split_cond(e.left, env, False) for r in split_cond(e.right, env, True)]
    if isinstance(e, L.BinOp) and e.op in ("==", "!="):
        a, b = _lin_eval(e.left, env), _lin_eval(e.right, env)
        op = e.op
    else:
        a, b, op = _lin_eval(e, env), Lin(None, 0), "!="
    if a.var == b.var:
        truth = (a.off == b.off) == (op == "==")
        return [()] if truth == want else []
    if not want:
        op = "!=" if op == "==" else "=="
    if a.var is None:
        a, b = b, a
    return [(Atom(a, op, b),)]


class SymbolicThread:
    """Runs one thread symbolically, yielding every feasible :class:`ThreadPath`."""

    def __init__(self, test: LitmusTest, tid: int, bound: int, builder, stats: PathStats):
        self.test = test
        self.tid = tid
        self.thread = test.threads[tid]
        self.bound = bound
        self.builder = builder
        self.stats = stats

    def paths(self) -> Iterator[ThreadPath]:
        env = {r: Lin(None, 0) for r in L.registers_of(self.thread)}
        for events, atoms, env2 in self._run(list(self.thread.body), (), (), env, {}, 0, 0):
            regs = tuple((r, env2[r]) for r in L.registers_of(self.thread))
            yield ThreadPath(events, atoms, regs)

    def _run(self, stmts, events, atoms, env, polls, nops, nvars):
        if not stmts:
            yield events, atoms, env
            return
        s, rest = stmts[0], stmts[1:]
        for ev, new_atoms, env2, more, polls2, nops2, nvars2 in self._step(s, env, polls, nops, nvars):
            atoms2 = atoms + new_atoms
            if new_atoms and not atoms_consistent(atoms2):
                continue
            yield from self._run(more + rest, events + ev, atoms2, env2, polls2, nops2, nvars2)

    def _call(self, method, args, env, polls, nops, nvars, result=None, result_kind=None,
              op_node=None, polled=None):
        """Expand one call into its variants."""
        op_id = None
        if method in ("Put", "Get", "RCAS", "RFAA"):
            op_id = 1000 * (self.tid + 1) + nops
            polls = {**polls, op_node: polls.get(op_node, ()) + (op_id,)}
            nops += 1
        for variant in self.builder(method, args, self.thread.node):
            nreads = max((i for sp in variant.subs for i in (sp.read,) if i is not None), default=-1) + 1
            rvars = tuple((self.tid, nvars + i) for i in range(nreads))
            new_atoms = ()
            if variant.cond is not None:
                op, idx, val = variant.cond
                new_atoms = (Atom(Lin(rvars[idx]), op, as_lin(val)),)
            env2 = env
            if result is not None:
                if result_kind == "read":
                    env2 = {**env, result: Lin(rvars[0])}
                elif result_kind == "op":
                    env2 = {**env, result: Lin(None, op_id)}
                elif result_kind == "polled":
                    env2 = {**env, result: Lin(None, polled)}
            ev = PathEvent(method, args, variant, rvars, op_id, polled)
            yield (ev,), new_atoms, env2, [], polls, nops, nvars + nreads

    def _step(self, s, env, polls, nops, nvars):
        V = lambda e: _lin_eval(e, env)
        t = self.test
        plain = lambda env2=env, more=(): ((), (), env2, list(more), polls, nops, nvars)
        if isinstance(s, L.Skip):
            yield plain()
        elif isinstance(s, L.Assign):
            yield plain({**env, s.reg: V(s.expr)})
        elif isinstance(s, L.Read):
            yield from self._call("Read", (s.loc,), env, polls, nops, nvars, s.reg, "read")
        elif isinstance(s, L.Write):
            yield from self._call("Write", (s.loc, V(s.expr)), env, polls, nops, nvars)
        elif isinstance(s, L.Cas):
            yield from self._call("CAS", (s.loc, V(s.expected), V(s.update)), env, polls, nops, nvars,
                                  s.reg, "read")
        elif isinstance(s, L.Mfence):
            yield from self._call("Mfence", (), env, polls, nops, nvars)
        elif isinstance(s, (L.Put, L.Get, L.Rcas, L.Rfaa)):
            node = t.loc(s.remote).node
            if isinstance(s, L.Put):
                src = s.src if isinstance(s.src, str) else V(s.src)
                call = ("Put", (s.remote, src, s.wid))
            elif isinstance(s, L.Get):
                call = ("Get", (s.local, s.remote, s.wid))
            elif isinstance(s, L.Rcas):
                call = ("RCAS", (s.local, s.remote, V(s.expected), V(s.update), s.wid))
            else:
                call = ("RFAA", (s.local, s.remote, V(s.addend), s.wid))
            yield from self._call(*call, env, polls, nops, nvars, s.result, "op", op_node=node)
        elif isinstance(s, L.Wait):
            yield from self._call("Wait", (s.wid,), env, polls, nops, nvars)
        elif isinstance(s, L.Rfence):
            yield from self._call("Rfence", (s.node,), env, polls, nops, nvars)
        elif isinstance(s, L.Poll):
            queue = polls.get(s.node, ())
            if not queue:
                return
            polls2 = {**polls, s.node: queue[1:]}
            yield from self._call("Poll", (s.node,), env, polls2, nops, nvars, s.result, "polled",
                                  polled=queue[0])
        elif isinstance(s, L.GFence):
            yield from self._call("GFence", (s.nodes,), env, polls, nops, nvars)
        elif isinstance(s, L.BrlWrite):
            yield from self._call("BrlWrite", (s.loc, V(s.expr)), env, polls, nops, nvars)
        elif isinstance(s, L.BrlRead):
            yield from self._call("BrlRead", (s.loc,), env, polls, nops, nvars, s.reg, "read")
        elif isinstance(s, L.Bcast):
            targets = L.bcast_targets(t, self.thread.node, s)
            if not targets:
                yield plain()
                return
            yield from self._call("Bcast", (s.loc, s.wid, targets), env, polls, nops, nvars)
        elif isinstance(s, L.BrlWait):
            yield from self._call("BrlWait", (s.wid,), env, polls, nops, nvars)
        elif isinstance(s, L.LockOp):
            yield from self._call(s.method, (s.lock,), env, polls, nops, nvars)
        elif isinstance(s, L.ScWrite):
            yield from self._call("ScWrite", (s.loc, V(s.expr)), env, polls, nops, nvars)
        elif isinstance(s, L.ScRead):
            yield from self._call("ScRead", (s.loc,), env, polls, nops, nvars, s.reg, "read")
        elif isinstance(s, L.ScCas):
            yield from self._call("ScCas", (s.loc, V(s.expected), V(s.update)), env, polls, nops, nvars,
                                  s.reg, "read")
        elif isinstance(s, L.ScFaa):
            yield from self._call("ScFaa", (s.loc, V(s.addend)), env, polls, nops, nvars, s.reg, "read")
        elif isinstance(s, (L.SetAdd, L.SetRemove)):
            v = V(s.expr)
            if v.var is not None:
                raise LitmusError("set elements must be operation identifiers")
            key = ("set", s.set)
            cur = list(env.get(key, ()))
            if isinstance(s, L.SetAdd):
                cur = sorted(cur + [v.off])
            elif v.off in cur:
                cur.remove(v.off)
            yield plain({**env, key: tuple(cur)})
        elif isinstance(s, L.Assume):
            for atoms in split_cond(s.cond, env, True):
                yield (), atoms, env, [], polls, nops, nvars
        elif isinstance(s, L.If):
            for atoms in split_cond(s.cond, env, True):
                yield (), atoms, env, list(s.then), polls, nops, nvars
            for atoms in split_cond(s.cond, env, False):
                yield (), atoms, env, list(s.orelse), polls, nops, nvars
        elif isinstance(s, L.While):
            yield plain(more=[_While(s, self.bound)])
        elif isinstance(s, _While):
            for atoms in split_cond(s.loop.cond, env, True):
                if s.left > 0:
                    yield (), atoms, env, list(s.loop.body) + [_While(s.loop, s.left - 1)], polls, nops, nvars
                else:
                    self.stats.cut += 1
            for atoms in split_cond(s.loop.cond, env, False):
                yield (), atoms, env, [], polls, nops, nvars
        elif isinstance(s, L.Loop):
            for k in range(self.bound + 1):
                yield plain(more=list(s.body) * k)
        elif isinstance(s, L.Choice):
            yield plain(more=s.left)
            yield plain(more=s.right)
        else:  # pragma: no cover
            raise TypeError(f"unknown statement {s!r}")


# ---------------------------------------------------------------------------
# Skeletons: one combination of thread paths


@dataclass
class Skeleton:
    test: LitmusTest
    dialect: str
    events: list[CEvent]
    subs: list[SubEvent]  # rval holds the read variable as a Lin, wval a Lin
    atoms: tuple[Atom, ...]
    regs: dict  # "thread.reg" -> Lin
    init: dict

    def po(self, a: SubEvent, b: SubEvent) -> bool:
        return a.tid == b.tid and a.pos < b.pos


def build_skeleton(test: LitmusTest, dialect: str, paths: Sequence[ThreadPath]) -> Skeleton:
    events: list[CEvent] = []
    subs: list[SubEvent] = []
    regs = {}
    sequential = dialect == "tso"
    for tid, path in enumerate(paths):
        pos = 0
        tname = test.threads[tid].name
        regs.update({f"{tname}.{r}": v for r, v in path.regs})
        for pe in path.events:
            ce = CEvent(len(events), tid, pos, pe.method, pe.args, wid_of(pe.method, pe.args), pe.op_id,
                        pe.polled)
            events.append(ce)
            for i, sp in enumerate(pe.variant.subs):
                rval = Lin(pe.rvars[sp.read]) if sp.read is not None else None
                wval = None
                if sp.write is not None:
                    add = as_lin(sp.write.add)
                    if sp.write.src is None:
                        wval = add
                    else:
                        if add.var is not None:
                            raise LitmusError("fetch-and-add of a read value is not supported")
                        wval = Lin(pe.rvars[sp.write.src], add.off)
                loc = sp.loc
                subs.append(SubEvent(len(subs), ce.id, tid, pos + (i if sequential else 0), sp.stamp,
                                     lib_of(pe.method), loc, rval, wval))
            pos += len(pe.variant.subs) if sequential else 1
    atoms = tuple(a for p in paths for a in p.atoms)
    return Skeleton(test, dialect, events, subs, atoms, regs, initial_values(test))


# ---------------------------------------------------------------------------
# Search


Edge = tuple[int, int, int]  # (graph, source, target-bits)


class Rules:
    """Per-skeleton mapping from witness edges to graph edges (model specific)."""

    graph_names: tuple[str, ...] = ()
    mo_graph: int = 0

    def static_edges(self) -> Iterable[Edge]:
        return ()

    def rf_edges(self, w: SubEvent, r: SubEvent) -> Iterable[Edge]:
        return ()

    def mo_edges(self, w1: SubEvent, w2: SubEvent) -> Iterable[Edge]:
        return ()

    def rb_edges(self, r: SubEvent, w: SubEvent) -> Iterable[Edge] | None:
        return ()

    def nfo_edges(self, a: SubEvent, b: SubEvent) -> Iterable[Edge]:
        return ()

    def rao_edges(self, r1: SubEvent, r2: SubEvent) -> Iterable[Edge]:
        return ()

    def lo_edges(self, lock: str, a1: int, a2: int) -> Iterable[Edge]:
        return ()

    def feed(self, g: int, changed: list[tuple[int, int]]) -> Iterable[Edge]:
        return ()


def edge(g: int, a: int, b: int) -> Edge:
    return (g, a, 1 << b)


@dataclass
class SearchResult:
    outcomes: set = field(default_factory=set)
    witnesses: dict = field(default_factory=dict)  # outcome -> CandidateExecution
    consistent: int = 0  # consistent candidates reached
    nodes: int = 0  # search nodes visited
    cut: int = 0  # thread paths dropped at the loop bound
    combos: int = 0
    time_ms: float = 0.0


class _State:
    __slots__ = ("graphs", "binding")

    def __init__(self, graphs, binding):
        self.graphs = graphs
        self.binding = binding

    def copy(self) -> "_State":
        return _State([g.copy() for g in self.graphs], self.binding.copy())


class Search:
    """Exhaustive pruned search over the witnesses of every path combination."""

    def __init__(self, test: LitmusTest, dialect: str, builder, make_rules: Callable[[Skeleton], Rules],
                 loop_bound: int = L.DEFAULT_LOOP_BOUND, full: bool = False,
                 max_candidates: int = DEFAULT_MAX_CANDIDATES, domain: Sequence[int] | None = None):
        self.test = test
        self.dialect = dialect
        self.builder = builder
        self.make_rules = make_rules
        self.bound = loop_bound
        self.full = full
        self.cap = max_candidates
        self.domain = tuple(domain) if domain is not None else L.value_domain(test, loop_bound)

    # -- driver ------------------------------------------------------------
    def run(self) -> SearchResult:
        start = time.perf_counter()
        res = SearchResult()
        stats = PathStats()
        per_thread = [list(SymbolicThread(self.test, i, self.bound, self.builder, stats).paths())
                      for i in range(len(self.test.threads))]
        res.cut = stats.cut
        for combo in itertools.product(*per_thread):
            atoms = tuple(a for p in combo for a in p.atoms)
            if not atoms_consistent(atoms):
                continue
            res.combos += 1
            sk = build_skeleton(self.test, self.dialect, combo)
            self._search_skeleton(sk, res)
        res.time_ms = (time.perf_counter() - start) * 1000
        return res

    def _tick(self, res: SearchResult):
        res.nodes += 1
        if res.nodes > self.cap:
            raise ResourceLimit(f"more than {self.cap} search nodes")

    def _add(self, st: _State, rules: Rules, edges: Iterable[Edge]) -> bool:
        work = list(edges)
        try:
            while work:
                g, x, bits = work.pop()
                changed = st.graphs[g].add_row(x, bits)
                if changed:
                    work.extend(rules.feed(g, changed))
        except Cycle:
            return False
        return True

    def _search_skeleton(self, sk: Skeleton, res: SearchResult):
        rules = self.make_rules(sk)
        n = len(sk.subs)
        st = _State([Closure(n) for _ in rules.graph_names], Binding())
        if not self._add(st, rules, rules.static_edges()):
            return
        reads = [s for s in sk.subs if s.is_read]
        writes_by_loc: dict = {}
        for s in sk.subs:
            if s.is_write:
                writes_by_loc.setdefault(s.loc, []).append(s)
        ctx = _Ctx(sk, rules, reads, writes_by_loc)
        self._rf(ctx, st, 0, {}, res)

    # -- rf ----------------------------------------------------------------
    def _rf(self, ctx, st, i, rf, res):
        self._tick(res)
        if i == len(ctx.reads):
            yield_roots = self._free_roots(ctx, st)
            if not yield_roots:
                self._mo_start(ctx, st, rf, res)
                return
            for vals in itertools.product(self.domain, repeat=len(yield_roots)):
                st2 = st.copy()
                for root, v in zip(yield_roots, vals):
                    st2.binding.const[root] = v
                if self._atoms_ok(ctx, st2):
                    self._mo_start(ctx, st2, rf, res)
            return
        r = ctx.reads[i]
        init = as_lin(init_value(ctx.sk.init, r.loc))
        options = [None] + [w for w in ctx.writes_by_loc.get(r.loc, ()) if w.id != r.id]
        for w in options:
            st2 = st.copy()
            if not st2.binding.unify(r.rval, init if w is None else w.wval):
                continue
            if not self._atoms_ok(ctx, st2):
                continue
            if w is not None and not self._add(st2, ctx.rules, ctx.rules.rf_edges(w, r)):
                continue
            rf2 = dict(rf)
            if w is not None:
                rf2[r.id] = w.id
            self._rf(ctx, st2, i + 1, rf2, res)

    def _atoms_ok(self, ctx, st) -> bool:
        return all(st.binding.holds(a) is not False for a in ctx.sk.atoms)

    def _free_roots(self, ctx, st) -> list:
        roots = []
        for r in ctx.reads:
            root, _ = st.binding.resolve(r.rval)
            if root is not None and root not in roots:
                roots.append(root)
        return roots

    # -- mo ----------------------------------------------------------------
    def _mo_start(self, ctx, st, rf, res):
        locs = sorted(ctx.writes_by_loc, key=repr)
        src_of = {r.id: rf.get(r.id) for r in ctx.reads}
        self._mo_loc(ctx, st, rf, src_of, locs, 0, {}, res)

    def _mo_loc(self, ctx, st, rf, src_of, locs, li, mo, res):
        if li == len(locs):
            self._after_mo(ctx, st, rf, mo, res)
            return
        loc = locs[li]
        writes = ctx.writes_by_loc[loc]
        readers = [r for r in ctx.reads if r.loc == loc]
        active = [r for r in readers if src_of[r.id] is None]
        self._mo_place(ctx, st, rf, src_of, locs, li, mo, res, loc, list(writes), [], readers, active)

    def _mo_place(self, ctx, st, rf, src_of, locs, li, mo, res, loc, remaining, placed, readers, active):
        self._tick(res)
        if not remaining:
            mo2 = {**mo, loc: tuple(w.id for w in placed)}
            self._mo_loc(ctx, st, rf, src_of, locs, li + 1, mo2, res)
            return
        g = ctx.rules.mo_graph
        for w in remaining:
            if any(st.graphs[g].has(o.id, w.id) for o in remaining if o is not w):
                continue
            st2 = st.copy()
            edges = list(ctx.rules.mo_edges(placed[-1], w)) if placed else []
            ok = True
            for r in active:
                if r.id == w.id:
                    continue
                e = ctx.rules.rb_edges(r, w)
                if e is None:
                    ok = False
                    break
                edges += e
            if not ok or not self._add(st2, ctx.rules, edges):
                continue
            active2 = active + [r for r in readers if src_of[r.id] == w.id]
            self._mo_place(ctx, st2, rf, src_of, locs, li, mo, res, loc,
                           [o for o in remaining if o is not w], placed + [w], readers, active2)

    # -- after mo: outcome known, remaining witnesses only decide consistency
    def _after_mo(self, ctx, st, rf, mo, res):
        memory = {loc: st.binding.value(ctx.sk.subs[order[-1]].wval) for loc, order in mo.items()}
        regs = {k: st.binding.value(v) for k, v in ctx.sk.regs.items()}
        outcome = outcome_of(self.test, regs, {**_concrete_init(ctx.sk.init), **memory})
        if outcome in res.outcomes and not self.full:
            return
        pairs = nfo_pairs(ctx.sk.subs, self.dialect)
        self._nfo(ctx, st, rf, mo, pairs, 0, [], res, outcome, regs)

    def _nfo(self, ctx, st, rf, mo, pairs, i, chosen, res, outcome, regs):
        self._tick(res)
        if i == len(pairs):
            groups = rao_groups(ctx.sk.subs, self.dialect)
            self._rao(ctx, st, rf, mo, chosen, sorted(groups.items()), 0, {}, res, outcome, regs)
            return
        a, b = pairs[i]
        for x, y in ((a, b), (b, a)):
            if outcome in res.outcomes and not self.full:
                return
            st2 = st.copy()
            if self._add(st2, ctx.rules, ctx.rules.nfo_edges(ctx.sk.subs[x], ctx.sk.subs[y])):
                self._nfo(ctx, st2, rf, mo, pairs, i + 1, chosen + [(x, y)], res, outcome, regs)

    def _rao(self, ctx, st, rf, mo, nfo, groups, gi, rao, res, outcome, regs):
        if gi == len(groups):
            locks = sorted(lock_groups(ctx.sk.events).items()) if self.dialect != "tso" else []
            self._lo(ctx, st, rf, mo, nfo, rao, locks, 0, {}, res, outcome, regs)
            return
        node, members = groups[gi]
        subs = ctx.sk.subs
        rules = ctx.rules

        def place(st, remaining, placed):
            self._tick(res)
            if outcome in res.outcomes and not self.full:
                return
            if not remaining:
                self._rao(ctx, st, rf, mo, nfo, groups, gi + 1, {**rao, node: tuple(placed)}, res, outcome,
                          regs)
                return
            for m in remaining:
                st2 = st.copy()
                edges = []
                for p in placed:
                    edges += rules.rao_edges(subs[p], subs[m])
                if self._add(st2, rules, edges):
                    place(st2, [o for o in remaining if o != m], placed + [m])

        place(st, list(members), [])

    def _lo(self, ctx, st, rf, mo, nfo, rao, locks, li, lo, res, outcome, regs):
        if li == len(locks):
            self._leaf(ctx, st, rf, mo, nfo, rao, lo, res, outcome, regs)
            return
        lock, acqs = locks[li]
        rules = ctx.rules

        def place(st, remaining, placed):
            self._tick(res)
            if outcome in res.outcomes and not self.full:
                return
            if not remaining:
                self._lo(ctx, st, rf, mo, nfo, rao, locks, li + 1, {**lo, lock: tuple(placed)}, res, outcome,
                         regs)
                return
            for a in remaining:
                st2 = st.copy()
                edges = []
                for p in placed:
                    edges += rules.lo_edges(lock, p, a)
                if self._add(st2, rules, edges):
                    place(st2, [o for o in remaining if o != a], placed + [a])

        place(st, list(acqs), [])

    def _leaf(self, ctx, st, rf, mo, nfo, rao, lo, res, outcome, regs):
        res.consistent += 1
        if outcome not in res.outcomes:
            res.outcomes.add(outcome)
            res.witnesses[outcome] = self._concretise(ctx, st, rf, mo, nfo, rao, lo, regs)

    def _concretise(self, ctx, st, rf, mo, nfo, rao, lo, regs) -> CandidateExecution:
        b = st.binding
        sk = ctx.sk

        def conc(v):
            if isinstance(v, Lin):
                return b.value(v)
            if isinstance(v, tuple):
                return tuple(conc(x) for x in v)
            return v

        events = tuple(replace(e, args=conc(e.args)) for e in sk.events)
        subs = tuple(replace(s, loc=conc(s.loc), rval=None if s.rval is None else b.value(s.rval),
                             wval=None if s.wval is None else b.value(s.wval)) for s in sk.subs)
        mo_c = {conc(loc): order for loc, order in mo.items()}
        pf = tso_pf(sk.events, sk.subs) if self.dialect == "tso" else frozenset()
        return CandidateExecution(self.dialect, events, subs, _concrete_init(sk.init), dict(regs), dict(rf),
                                  mo_c, frozenset(nfo), dict(rao), pf, dict(lo), self.test.nodes)


@dataclass
class _Ctx:
    sk: Skeleton
    rules: Rules
    reads: list
    writes_by_loc: dict


def _concrete_init(init: dict) -> dict:
    return dict(init)
