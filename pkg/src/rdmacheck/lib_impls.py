"""Library implementations as program transformations.

Each inliner replaces the calls of one library by its implementation in terms
of lower-level operations and returns a new test.  Auxiliary locations,
registers, wids and sets all start with ``_`` and are therefore excluded from
outcomes; a generated name that is already taken raises :class:`LitmusError`.

===================  ==================================================
``inline_wlock``     ticket lock over remote FAA and shared variables
``inline_slock``     weak lock plus a global fence before each release
``inline_nlock``     ticket lock over remote FAA, get and put
``inline_sc``        node-locked put, get and remote RMWs
``translate_wait_to_tso``  wids become per-node sets of polled op ids
===================  ==================================================
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .litmus import (
    Assign, BinOp, Bcast, BrlRead, BrlWrite, Choice, Const, GFence, Get, If, LitmusError, LitmusTest, Location,
    LockOp, Loop, Not, Poll, Put, Rcas, Read, Rfaa, Rfence, ScCas, ScFaa, ScRead, ScWrite, SetAdd, SetEmpty,
    SetRemove, Thread, Var, Wait, While, Write, LIBRARY_ONLY, check_test, registers_of, walk, wids_of,
)


class _Names:
    """Fresh auxiliary names; refuses any name the test already uses."""

    def __init__(self, test: LitmusTest, tag: str):
        self.tag = tag
        self.taken = set(test.declared_names())
        for t in test.threads:
            self.taken |= set(registers_of(t)) | wids_of(t)
        self.counter = 0

    def claim(self, name: str) -> str:
        if not name.startswith("_"):  # pragma: no cover - internal misuse
            raise ValueError(name)
        if name in self.taken:
            raise LitmusError(f"auxiliary name {name!r} is already used by the program")
        self.taken.add(name)
        return name

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return self.claim(f"_{self.tag}{stem}{self.counter}")


Rewrite = Callable[[Thread, object], "list | None"]


def _map_body(body, t: Thread, fn: Rewrite) -> tuple:
    out = []
    for s in body:
        if isinstance(s, If):
            out.append(If(s.cond, _map_body(s.then, t, fn), _map_body(s.orelse, t, fn)))
        elif isinstance(s, While):
            out.append(While(s.cond, _map_body(s.body, t, fn)))
        elif isinstance(s, Loop):
            out.append(Loop(_map_body(s.body, t, fn)))
        elif isinstance(s, Choice):
            out.append(Choice(_map_body(s.left, t, fn), _map_body(s.right, t, fn)))
        else:
            new = fn(t, s)
            out += [s] if new is None else list(new)
    return tuple(out)


def _dialect(threads) -> str:
    for t in threads:
        if any(isinstance(s, LIBRARY_ONLY) for s in walk(t.body)):
            return "library"
    return "wait"


def _finish(test: LitmusTest, threads, suffix: str, **extra) -> LitmusTest:
    out = replace(test, name=f"{test.name}_{suffix}", threads=tuple(threads), **extra)
    out = replace(out, dialect=extra.get("dialect", _dialect(out.threads)), model="wait")
    check_test(out)
    return out


def _lock_node(test: LitmusTest, lock: str) -> int:
    node = next(l.node for l in test.locks if l.name == lock)
    return node or 1


def _users(test: LitmusTest, methods) -> dict[str, list[Thread]]:
    """Threads calling each lock through ``methods``, in declaration order."""
    users: dict[str, list[Thread]] = {}
    for t in test.threads:
        for s in walk(t.body):
            if isinstance(s, LockOp) and s.method in methods:
                lst = users.setdefault(s.lock, [])
                if t not in lst:
                    lst.append(t)
    return users


def _eq(a: str, b: str):
    return BinOp("==", Var(a), Var(b))


def _plus1(r: str):
    return BinOp("+", Var(r), Const(1))


# ---------------------------------------------------------------------------
# Weak and strong locks


def inline_wlock(test: LitmusTest) -> LitmusTest:
    """Replace ``AcqWL``/``RelWL`` by the ticket-lock implementation.

    Per lock: a ticket dispenser on the lock's node (node 1 when unplaced), a
    ticket location per user thread on its node, and a shared release
    variable per user thread.
    """
    names = _Names(test, "wl")
    users = _users(test, ("AcqWL", "RelWL"))
    disp, ticket, release = {}, {}, {}
    locs, brl = list(test.locs), list(test.brl)
    for lock, ts in users.items():
        disp[lock] = names.claim(f"_wl_{lock}_a")
        locs.append(Location(disp[lock], _lock_node(test, lock), 0))
        for t in ts:
            ticket[lock, t.name] = names.claim(f"_wl_{lock}_p_{t.name}")
            locs.append(Location(ticket[lock, t.name], t.node, 0))
            release[lock, t.name] = names.claim(f"_wl_{lock}_r_{t.name}")
            brl.append(Location(release[lock, t.name], 0, 0))

    def acquire(t: Thread, lock: str) -> list:
        p, d = ticket[lock, t.name], names.fresh("_wd")
        v, go = names.fresh("_v"), names.fresh("_go")
        check: tuple = ()  # no release variable matched: try again
        for u in reversed(users[lock]):
            c = names.fresh("_c")
            check = (BrlRead(c, release[lock, u.name]), If(_eq(c, v), (Assign(go, Const(0)),), check))
        return [Rfaa(p, disp[lock], Const(1), d), Wait(d), Read(v, p), Assign(go, Const(1)),
                While(BinOp("==", Var(go), Const(1)), check)]

    def release_(t: Thread, lock: str) -> list:
        v, x = names.fresh("_v"), release[lock, t.name]
        return [Read(v, ticket[lock, t.name]), BrlWrite(x, _plus1(v)), Bcast(x, names.fresh("_wb"))]

    def rw(t: Thread, s):
        if isinstance(s, LockOp) and s.method == "AcqWL":
            return acquire(t, s.lock)
        if isinstance(s, LockOp) and s.method == "RelWL":
            return release_(t, s.lock)
        return None

    threads = [replace(t, body=_map_body(t.body, t, rw)) for t in test.threads]
    return _finish(test, threads, "iwl", locs=tuple(locs), brl=tuple(brl))


def inline_slock(test: LitmusTest, deep: bool = True) -> LitmusTest:
    """``AcqSL`` becomes ``AcqWL``; ``RelSL`` becomes a global fence then ``RelWL``.

    With ``deep`` the resulting weak-lock calls are inlined as well.
    """
    every = tuple(range(1, test.nodes + 1))

    def rw(t: Thread, s):
        if isinstance(s, LockOp) and s.method == "AcqSL":
            return [LockOp("AcqWL", s.lock)]
        if isinstance(s, LockOp) and s.method == "RelSL":
            return [GFence(every), LockOp("RelWL", s.lock)]
        return None

    threads = [replace(t, body=_map_body(t.body, t, rw)) for t in test.threads]
    out = _finish(test, threads, "isl")
    return replace(inline_wlock(out), name=f"{test.name}_isl") if deep else out


# ---------------------------------------------------------------------------
# Node locks


def inline_nlock(test: LitmusTest) -> LitmusTest:
    """Replace ``AcqNL``/``RelNL`` by the ticket lock hosted on the lock's node."""
    names = _Names(test, "nl")
    users = _users(test, ("AcqNL", "RelNL"))
    disp, turn, ticket = {}, {}, {}
    locs = list(test.locs)
    for lock, ts in users.items():
        home = _lock_node(test, lock)
        disp[lock] = names.claim(f"_nl_{lock}_a")
        turn[lock] = names.claim(f"_nl_{lock}_r")
        locs += [Location(disp[lock], home, 0), Location(turn[lock], home, 0)]
        for t in ts:
            ticket[lock, t.name] = names.claim(f"_nl_{lock}_p_{t.name}")
            locs.append(Location(ticket[lock, t.name], t.node, 0))

    def acquire(t: Thread, lock: str) -> list:
        p = ticket[lock, t.name]
        d, d2 = names.fresh("_wd"), names.fresh("_wd")
        v, go, w = names.fresh("_v"), names.fresh("_go"), names.fresh("_w")
        body = (Get(p, turn[lock], d2), Wait(d2), Read(w, p), If(_eq(w, v), (Assign(go, Const(0)),), ()))
        return [Rfaa(p, disp[lock], Const(1), d), Wait(d), Read(v, p), Assign(go, Const(1)),
                While(BinOp("==", Var(go), Const(1)), body), Write(p, _plus1(v))]

    def release_(t: Thread, lock: str) -> list:
        return [Rfence(_lock_node(test, lock)), Put(turn[lock], ticket[lock, t.name], None)]

    def rw(t: Thread, s):
        if isinstance(s, LockOp) and s.method == "AcqNL":
            return acquire(t, s.lock)
        if isinstance(s, LockOp) and s.method == "RelNL":
            return release_(t, s.lock)
        return None

    threads = [replace(t, body=_map_body(t.body, t, rw)) for t in test.threads]
    return _finish(test, threads, "inl", locs=tuple(locs))


# ---------------------------------------------------------------------------
# SC library


def inline_sc(test: LitmusTest, deep: bool = True) -> LitmusTest:
    """Each SC location becomes a plain location guarded by a node lock on its node.

    With ``deep`` the node-lock calls are inlined as well.
    """
    names = _Names(test, "sc")
    lock_of = {l.name: names.claim(f"_sc_{l.name}_l") for l in test.sc}
    result, staged = {}, {}
    for t in test.threads:
        if any(isinstance(s, (ScWrite, ScRead, ScCas, ScFaa)) for s in walk(t.body)):
            result[t.name] = names.claim(f"_sc_r_{t.name}")
            for l in test.sc:
                staged[l.name, t.name] = names.claim(f"_sc_{l.name}_p_{t.name}")
    node_of_thread = {t.name: t.node for t in test.threads}
    locs = list(test.locs) + [Location(l.name, l.node, l.init) for l in test.sc]
    locs += [Location(r, node_of_thread[tn], 0) for tn, r in result.items()]
    locs += [Location(p, node_of_thread[tn], 0) for (_x, tn), p in staged.items()]
    locks = list(test.locks) + [Location(lock_of[l.name], l.node, 0) for l in test.sc]

    def rw(t: Thread, s):
        if not isinstance(s, (ScWrite, ScRead, ScCas, ScFaa)):
            return None
        lk = lock_of[s.loc]
        acq, rel = LockOp("AcqNL", lk), LockOp("RelNL", lk)
        r = result[t.name]
        if isinstance(s, ScWrite):
            p = staged[s.loc, t.name]
            return [acq, Write(p, s.expr), Put(s.loc, p, None), rel]
        d = names.fresh("_wd")
        if isinstance(s, ScRead):
            op = Get(r, s.loc, d)
        elif isinstance(s, ScCas):
            op = Rcas(r, s.loc, s.expected, s.update, d)
        else:
            op = Rfaa(r, s.loc, s.addend, d)
        tail = [Read(s.reg, r)] if getattr(s, "reg", None) else []
        return [acq, op, rel, Wait(d)] + tail

    threads = [replace(t, body=_map_body(t.body, t, rw)) for t in test.threads]
    out = _finish(test, threads, "isc", locs=tuple(locs), sc=(), locks=tuple(locks))
    return replace(inline_nlock(out), name=f"{test.name}_isc") if deep else out


def inline_library(test: LitmusTest, lib: str) -> LitmusTest:
    """Fully inline one library (``wlock``, ``slock``, ``nlock`` or ``sc``)."""
    fns = {"wlock": inline_wlock, "slock": inline_slock, "nlock": inline_nlock, "sc": inline_sc}
    if lib not in fns:
        raise ValueError(f"no implementation for library {lib!r}")
    return fns[lib](test)


# ---------------------------------------------------------------------------
# WAIT to TSO


def translate_wait_to_tso(test: LitmusTest) -> LitmusTest:
    """Rewrite a WAIT-dialect test into the tso dialect.

    Every remote operation with wid ``d`` towards node ``n`` records its op id
    in the set ``_s_d_n``.  ``Wait(d)`` polls each node until that node's set
    for ``d`` is empty, removing each polled id from all of the thread's sets
    for that node.
    """
    if test.dialect != "wait":
        raise LitmusError("only wait-dialect tests can be translated to the tso dialect")
    names = _Names(test, "w")
    sets: dict[tuple[str, str, int], str] = {}
    for t in test.threads:
        for d in sorted(wids_of(t)):
            for n in range(1, test.nodes + 1):
                sets[t.name, d, n] = names.claim(f"_s_{t.name}_{d}_{n}")

    def rw(t: Thread, s):
        if isinstance(s, (Put, Get, Rcas, Rfaa)):
            if s.wid is None:
                return [replace(s, wid=None)]
            o = names.fresh("_o")
            n = test.node_of(s.remote)
            return [replace(s, wid=None, result=o), SetAdd(sets[t.name, s.wid, n], Var(o))]
        if isinstance(s, Wait):
            out = []
            for n in range(1, test.nodes + 1):
                o = names.fresh("_o")
                mine = [v for (tn, _d, m), v in sets.items() if tn == t.name and m == n]
                body = (Poll(n, o),) + tuple(SetRemove(x, Var(o)) for x in mine)
                out.append(While(Not(SetEmpty(sets[t.name, s.wid, n])), body))
            return out
        return None

    threads = [replace(t, body=_map_body(t.body, t, rw)) for t in test.threads]
    out = replace(test, name=f"{test.name}_tso", threads=tuple(threads), dialect="tso", model="tso-op",
                  sets=tuple(test.sets) + tuple(sets.values()))
    check_test(out)
    return out


__all__ = ["inline_wlock", "inline_slock", "inline_nlock", "inline_sc", "inline_library",
           "translate_wait_to_tso"]
