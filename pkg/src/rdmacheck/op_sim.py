"""Operational RDMA-TSO machine with remote RMWs, explored exhaustively.

A machine state holds the program residue of every thread, memory, the store
buffers, the per-node remote-atomic locks and one queue pair per
(thread, remote node).  Every FIFO is stored oldest-first: index 0 is the head.

Queue entries are plain tuples tagged by their first field:

=========================  =====================================================
``("W", x, v)``            CPU write in a store buffer
``("PUT", y, src, op)``    put whose local source is not read yet
``("GET", x, y, op)``      get whose remote source is not read yet
``("RCAS", z, x, e, n, op)``  remote CAS
``("RFAA", z, x, a, op)``  remote fetch-and-add
``("RF", n)``              remote fence towards node ``n``
``("RW", y, v)``           NIC remote write of a put
``("AW", y, v)``           NIC remote write of an RMW (holds the lock of y's node)
``("ACK", op)``            acknowledgement of a put
``("LW", x, v, op)``       NIC local write of a get or RMW
``("CN", op)``             completion notification, consumed by a poll
=========================  =====================================================
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .engine import ResourceLimit
from .exec_enum import outcome_of
from .litmus import (
    DEFAULT_LOOP_BOUND, Assign, Assume, Cas, Choice, Get, If, LitmusError, LitmusTest, Loop, Mfence, Poll,
    Put, Rcas, Read, Rfaa, Rfence, SetAdd, SetRemove, Skip, While, Write, _BoundedWhile, eval_expr,
    registers_of,
)
from .report import Verdict, judge

DEFAULT_MAX_STATES = 10**6

REMOTE_KINDS = frozenset({"PUT", "GET", "RCAS", "RFAA", "RF"})
# Entries allowed ahead of a command for send-write, remote-read and the RMW rules.
_PASSABLE = frozenset({"GET", "LW", "ACK"})
# Entries allowed ahead of a NIC local read.
_PASSABLE_LOCAL_READ = frozenset({"LW", "AW", "RW", "GET", "RCAS", "RFAA", "ACK"})

PIPE_KINDS = frozenset({"PUT", "RW", "AW", "ACK", "GET", "LW", "RCAS", "RFAA", "RF"})
WBR_KINDS = frozenset({"RW", "AW"})
WBL_KINDS = frozenset({"LW", "CN"})
SB_KINDS = frozenset({"W", "PUT", "GET", "RCAS", "RFAA", "RF"})

QP_RULES = ("local-read", "send-write", "remote-write", "ack", "remote-read", "send-read", "local-write",
            "rfence", "nCAS-F", "nCAS-S", "nFAA", "nRMW-1", "nRMW-2")


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class ThreadState:
    """Residue of one thread: statements left, registers and sets, ops issued."""

    code: tuple
    env: tuple  # sorted (name, value) pairs; sets under ("set", name)
    nops: int = 0

    def lookup(self) -> dict:
        return dict(self.env)


@dataclass(frozen=True)
class QueuePair:
    pipe: tuple = ()
    wbr: tuple = ()
    wbl: tuple = ()

    def empty(self) -> bool:
        return not (self.pipe or self.wbr or self.wbl)


@dataclass(frozen=True)
class MachineState:
    threads: tuple[ThreadState, ...]
    memory: tuple  # sorted (location, value) pairs
    buffers: tuple[tuple, ...]  # one store buffer per thread
    busy: frozenset = frozenset()  # nodes whose remote-atomic lock is taken
    qps: tuple = ()  # sorted ((tid, node), QueuePair) pairs; empty pairs omitted

    def mem(self) -> dict:
        return dict(self.memory)

    def qp(self, tid: int, node: int) -> QueuePair:
        for key, q in self.qps:
            if key == (tid, node):
                return q
        return QueuePair()

    def encode(self) -> bytes:
        """Deterministic byte encoding (all components are canonical tuples)."""
        return repr(self).encode()


def _env(d: dict) -> tuple:
    return tuple(sorted(d.items(), key=repr))


def _with_qp(st: MachineState, tid: int, node: int, q: QueuePair) -> tuple:
    rest = [(k, v) for k, v in st.qps if k != (tid, node)]
    if not q.empty():
        rest.append(((tid, node), q))
    return tuple(sorted(rest))


def _set_mem(memory: tuple, x: str, v: int) -> tuple:
    d = dict(memory)
    d[x] = v
    return tuple(sorted(d.items()))


def initial_state(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND) -> MachineState:
    """Memory from the declared initial values; all FIFOs empty; all locks free."""
    _require_tso(test)
    threads = []
    for t in test.threads:
        env = {r: 0 for r in registers_of(t)}
        env.update({("set", s): () for s in test.sets})
        threads.append(ThreadState(tuple(t.body), _env(env)))
    memory = tuple(sorted((l.name, l.init) for l in test.locs))
    return MachineState(tuple(threads), memory, tuple(() for _ in test.threads))


def _require_tso(test: LitmusTest) -> None:
    if test.dialect != "tso":
        raise LitmusError("the operational machine runs tso-dialect tests only")


# ---------------------------------------------------------------------------
# Invariants


def check_invariants(st: MachineState) -> list[str]:
    """Structural invariants of a reachable state; returns the violations."""
    bad = []
    for tid, b in enumerate(st.buffers):
        if any(e[0] not in SB_KINDS for e in b):
            bad.append(f"store buffer of thread {tid} holds a queue-pair entry")
    holders: dict[int, int] = {}
    for (tid, node), q in st.qps:
        if any(e[0] not in PIPE_KINDS for e in q.pipe):
            bad.append(f"pipe ({tid},{node}) holds a completion")
        if any(e[0] not in WBR_KINDS for e in q.wbr):
            bad.append(f"wbR ({tid},{node}) holds a non-remote-write")
        if any(e[0] not in WBL_KINDS for e in q.wbl):
            bad.append(f"wbL ({tid},{node}) holds a non-local-write")
        for e in q.pipe + q.wbr:
            if e[0] == "AW":
                holders[node] = holders.get(node, 0) + 1
    for node in st.busy:
        if holders.get(node, 0) != 1:
            bad.append(f"lock of node {node} busy with {holders.get(node, 0)} RMWs in flight")
    for node, k in holders.items():
        if node not in st.busy:
            bad.append(f"{k} RMW writes toward node {node} while its lock is free")
    return bad


def is_final(st: MachineState) -> bool:
    """All threads done, store buffers empty, pipes and wbR empty, wbL only completions."""
    if any(t.code for t in st.threads) or any(st.buffers):
        return False
    return all(not q.pipe and not q.wbr and all(e[0] == "CN" for e in q.wbl) for _, q in st.qps)


# ---------------------------------------------------------------------------
# Program transitions


class _Blocked(Exception):
    """A path that cannot continue (failed assume, or a loop past its bound)."""

    def __init__(self, bound: bool):
        self.bound = bound


def _value(e, env: dict):
    sets = {k: not v for k, v in env.items() if isinstance(k, tuple)}
    return eval_expr(e, {**env, **sets})


def _settle(t: ThreadState, loop_bound: int) -> ThreadState:
    """Run thread-local deterministic statements until a visible one (or the end)."""
    code, env = list(t.code), t.lookup()
    while code:
        s = code[0]
        if isinstance(s, Skip):
            code.pop(0)
        elif isinstance(s, Assign):
            code.pop(0)
            env[s.reg] = _value(s.expr, env)
        elif isinstance(s, Assume):
            if not _value(s.cond, env):
                raise _Blocked(False)
            code.pop(0)
        elif isinstance(s, If):
            code[:1] = list(s.then if _value(s.cond, env) else s.orelse)
        elif isinstance(s, While):
            code[:1] = [_BoundedWhile(s, loop_bound)]
        elif isinstance(s, _BoundedWhile):
            if not _value(s.loop.cond, env):
                code.pop(0)
            elif s.left == 0:
                raise _Blocked(True)
            else:
                code[:1] = list(s.loop.body) + [_BoundedWhile(s.loop, s.left - 1)]
        elif isinstance(s, SetAdd):
            code.pop(0)
            env[("set", s.set)] = tuple(sorted(env[("set", s.set)] + (_value(s.expr, env),)))
        elif isinstance(s, SetRemove):
            code.pop(0)
            cur = list(env[("set", s.set)])
            v = _value(s.expr, env)
            if v in cur:
                cur.remove(v)
            env[("set", s.set)] = tuple(cur)
        else:
            break
    return ThreadState(tuple(code), _env(env), t.nops)


class Machine:
    """Successor relation of one test's machine."""

    def __init__(self, test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND):
        _require_tso(test)
        self.test = test
        self.loop_bound = loop_bound
        self.bound_hit = False

    # -- helpers --------------------------------------------------------
    def _thread(self, st: MachineState, tid: int, t: ThreadState) -> MachineState | None:
        try:
            t = _settle(t, self.loop_bound)
        except _Blocked as b:
            self.bound_hit |= b.bound
            return None
        return replace(st, threads=st.threads[:tid] + (t,) + st.threads[tid + 1:])

    def settle(self, st: MachineState) -> MachineState | None:
        for tid, t in enumerate(st.threads):
            st = self._thread(st, tid, t)
            if st is None:
                return None
        return st

    def _buf(self, st: MachineState, tid: int, b: tuple) -> MachineState:
        return replace(st, buffers=st.buffers[:tid] + (b,) + st.buffers[tid + 1:])

    # -- successors -----------------------------------------------------
    def step(self, st: MachineState) -> list[tuple[str, MachineState]]:
        """All ``(label, successor)`` pairs."""
        out = []
        for tid in range(len(st.threads)):
            out += self._program(st, tid)
            out += self._buffer(st, tid)
        for (tid, node), q in st.qps:
            for rule, st2 in self._queue_pair(st, tid, node, q):
                out.append((f"{rule} ({self.test.threads[tid].name}->n{node})", st2))
        return out

    def _program(self, st: MachineState, tid: int) -> list[tuple[str, MachineState]]:
        t = st.threads[tid]
        if not t.code:
            return []
        s, rest = t.code[0], t.code[1:]
        env = t.lookup()
        name = self.test.threads[tid].name
        buf = st.buffers[tid]
        mem = st.mem()
        out = []

        def go(label, env2=env, nops=t.nops, code=rest, base=st):
            nxt = self._thread(base, tid, ThreadState(code, _env(env2), nops))
            if nxt is not None:
                out.append((f"{name}: {label}", nxt))

        if isinstance(s, Read):
            v = mem.get(s.loc, 0)
            for e in buf:
                if e[0] == "W" and e[1] == s.loc:
                    v = e[2]
            go(f"lR({s.loc},{v})", {**env, s.reg: v})
        elif isinstance(s, Write):
            v = _value(s.expr, env)
            go(f"lW({s.loc},{v})", base=self._buf(st, tid, buf + (("W", s.loc, v),)))
        elif isinstance(s, Cas):
            if not buf:
                exp, new = _value(s.expected, env), _value(s.update, env)
                old = mem.get(s.loc, 0)
                env2 = {**env, s.reg: old} if s.reg else env
                if old == exp:
                    go(f"CAS({s.loc},{old},{new})", env2,
                       base=replace(st, memory=_set_mem(st.memory, s.loc, new)))
                else:
                    go(f"CAS-fail({s.loc},{old})", env2)
        elif isinstance(s, Mfence):
            if not buf:
                go("MF")
        elif isinstance(s, (Put, Get, Rcas, Rfaa)):
            op = 1000 * (tid + 1) + t.nops
            env2 = {**env, s.result: op} if s.result else env
            if isinstance(s, Put):
                src = s.src if isinstance(s.src, str) else _value(s.src, env)
                e = ("PUT", s.remote, src, op)
            elif isinstance(s, Get):
                e = ("GET", s.local, s.remote, op)
            elif isinstance(s, Rcas):
                e = ("RCAS", s.local, s.remote, _value(s.expected, env), _value(s.update, env), op)
            else:
                e = ("RFAA", s.local, s.remote, _value(s.addend, env), op)
            go(_show(e), env2, t.nops + 1, base=self._buf(st, tid, buf + (e,)))
        elif isinstance(s, Rfence):
            go(f"rfence({s.node})", base=self._buf(st, tid, buf + (("RF", s.node),)))
        elif isinstance(s, Poll):
            q = st.qp(tid, s.node)
            if q.wbl and q.wbl[0][0] == "CN":
                op = q.wbl[0][1]
                env2 = {**env, s.result: op} if s.result else env
                base = replace(st, qps=_with_qp(st, tid, s.node, replace(q, wbl=q.wbl[1:])))
                go(f"poll({s.node})={op}", env2, base=base)
        elif isinstance(s, Choice):
            go("choice-left", code=tuple(s.left) + rest)
            go("choice-right", code=tuple(s.right) + rest)
        elif isinstance(s, Loop):
            for k in range(self.loop_bound + 1):
                go(f"loop x{k}", code=tuple(s.body) * k + rest)
        else:
            raise LitmusError(f"{type(s).__name__} is not a tso-dialect statement")
        return out

    def _buffer(self, st: MachineState, tid: int) -> list[tuple[str, MachineState]]:
        buf = st.buffers[tid]
        if not buf:
            return []
        e, rest = buf[0], buf[1:]
        name = self.test.threads[tid].name
        st2 = self._buf(st, tid, rest)
        if e[0] == "W":
            return [(f"{name}: flush {e[1]}:={e[2]}",
                     replace(st2, memory=_set_mem(st.memory, e[1], e[2])))]
        node = e[1] if e[0] == "RF" else self.test.node_of(e[2] if e[0] != "PUT" else e[1])
        q = st.qp(tid, node)
        q2 = replace(q, pipe=q.pipe + (e,))
        return [(f"{name}: enter-pipe n{node} {_show(e)}", replace(st2, qps=_with_qp(st2, tid, node, q2)))]

    def _queue_pair(self, st: MachineState, tid: int, node: int, q: QueuePair):
        mem = st.mem()
        pipe = q.pipe

        def put(q2: QueuePair, memory=st.memory, busy=st.busy):
            return replace(st, memory=memory, busy=busy, qps=_with_qp(st, tid, node, q2))

        def ahead_ok(i: int, allowed) -> bool:
            return all(p[0] in allowed for p in pipe[:i])

        def swap(i: int, *entries) -> tuple:
            return pipe[:i] + entries + pipe[i + 1:]

        out = []
        if pipe and pipe[0][0] == "RF":
            out.append(("rfence", put(replace(q, pipe=pipe[1:]))))
        for i, e in enumerate(pipe):
            k = e[0]
            if k == "PUT" and all(w[0] == "CN" for w in q.wbl) and ahead_ok(i, _PASSABLE_LOCAL_READ):
                _, y, src, op = e
                v = mem.get(src, 0) if isinstance(src, str) else src
                out.append(("local-read", put(replace(q, pipe=swap(i, ("RW", y, v, op))))))
            elif k == "RW" and ahead_ok(i, _PASSABLE):
                _, y, v, op = e
                out.append(("send-write", put(replace(q, pipe=swap(i, ("ACK", op)), wbr=q.wbr + (("RW", y, v),)))))
            elif k == "GET" and not q.wbr and ahead_ok(i, _PASSABLE):
                _, x, y, op = e
                out.append(("remote-read", put(replace(q, pipe=swap(i, ("LW", x, mem.get(y, 0), op))))))
            elif k in ("RCAS", "RFAA") and not q.wbr and node not in st.busy and ahead_ok(i, _PASSABLE):
                z, x = e[1], e[2]
                old = mem.get(x, 0)
                op = e[-1]
                if k == "RCAS":
                    if old != e[3]:
                        out.append(("nCAS-F", put(replace(q, pipe=swap(i, ("LW", z, old, op))))))
                    else:
                        # oldest first: the atomic write precedes the local write
                        q2 = replace(q, pipe=swap(i, ("AW", x, e[4]), ("LW", z, old, op)))
                        out.append(("nCAS-S", put(q2, busy=st.busy | {node})))
                else:
                    q2 = replace(q, pipe=swap(i, ("AW", x, old + e[3]), ("LW", z, old, op)))
                    out.append(("nFAA", put(q2, busy=st.busy | {node})))
            elif k == "AW" and ahead_ok(i, _PASSABLE):
                out.append(("nRMW-1", put(replace(q, pipe=swap(i), wbr=q.wbr + (e,)))))
        if pipe and pipe[0][0] == "ACK":
            out.append(("ack", put(replace(q, pipe=pipe[1:], wbl=q.wbl + (("CN", pipe[0][1]),)))))
        if pipe and pipe[0][0] == "LW":
            _, x, v, op = pipe[0]
            out.append(("send-read", put(replace(q, pipe=pipe[1:], wbl=q.wbl + (("LW", x, v, op), ("CN", op))))))
        if q.wbr:
            head = q.wbr[0]
            if head[0] == "RW":
                out.append(("remote-write", put(replace(q, wbr=q.wbr[1:]), memory=_set_mem(st.memory, head[1], head[2]))))
            else:
                out.append(("nRMW-2", put(replace(q, wbr=q.wbr[1:]), memory=_set_mem(st.memory, head[1], head[2]),
                                          busy=st.busy - {node})))
        for i, w in enumerate(q.wbl):
            if w[0] == "LW":
                out.append(("local-write", put(replace(q, wbl=q.wbl[:i] + q.wbl[i + 1:]),
                                               memory=_set_mem(st.memory, w[1], w[2]))))
                break
        return out


def _show(e: tuple) -> str:
    k = e[0]
    if k == "PUT":
        return f"Put({e[1]},{e[2]})#{e[3]}"
    if k == "GET":
        return f"Get({e[1]},{e[2]})#{e[3]}"
    if k == "RCAS":
        return f"RCAS({e[1]},{e[2]},{e[3]},{e[4]})#{e[5]}"
    if k == "RFAA":
        return f"RFAA({e[1]},{e[2]},{e[3]})#{e[4]}"
    if k == "RF":
        return f"rfence({e[1]})"
    return repr(e)


# ---------------------------------------------------------------------------
# Exploration


@dataclass
class Exploration:
    outcomes: set = field(default_factory=set)
    traces: dict = field(default_factory=dict)  # outcome -> list of labels (when requested)
    states: int = 0
    deadlocks: int = 0  # non-final states without successors
    bound_hit: bool = False


def outcome_from(test: LitmusTest, st: MachineState) -> tuple:
    regs = {}
    for t, ts in zip(test.threads, st.threads):
        for k, v in ts.env:
            if isinstance(k, str):
                regs[f"{t.name}.{k}"] = v
    return outcome_of(test, regs, st.mem())


def explore(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND, max_states: int = DEFAULT_MAX_STATES,
            traces: bool = False, check: bool = True) -> Exploration:
    """Breadth-first closure of the step relation with structural deduplication.

    Raises :class:`ResourceLimit` past ``max_states`` distinct states.  With
    ``check`` every reached state is checked against :func:`check_invariants`.
    """
    m = Machine(test, loop_bound)
    res = Exploration()
    start = m.settle(initial_state(test, loop_bound))
    if start is None:
        res.bound_hit = m.bound_hit
        return res
    parent: dict = {start: None}
    seen = {start} if not traces else parent
    frontier = deque([start])
    while frontier:
        st = frontier.popleft()
        res.states += 1
        if check:
            bad = check_invariants(st)
            if bad:
                raise AssertionError("; ".join(bad))
        succ = m.step(st)
        if not succ:
            if is_final(st):
                o = outcome_from(test, st)
                if o not in res.outcomes:
                    res.outcomes.add(o)
                    if traces:
                        res.traces[o] = _trace(parent, st)
            else:
                res.deadlocks += 1
            continue
        for label, nxt in succ:
            if nxt in seen:
                continue
            if len(seen) >= max_states:
                raise ResourceLimit(f"more than {max_states} machine states")
            if traces:
                parent[nxt] = (st, label)
            else:
                seen.add(nxt)
            frontier.append(nxt)
    res.bound_hit = m.bound_hit
    return res


def _trace(parent: dict, st: MachineState) -> list[str]:
    labels = []
    while parent[st] is not None:
        st, label = parent[st]
        labels.append(label)
    return labels[::-1]


def replay_trace(test: LitmusTest, labels: list[str], loop_bound: int = DEFAULT_LOOP_BOUND) -> set:
    """Outcomes of the final states reached by following ``labels`` from the start.

    Re-runs the step relation label by label, keeping every successor whose
    label matches; used to re-verify witness traces independently of the search.
    """
    m = Machine(test, loop_bound)
    start = m.settle(initial_state(test, loop_bound))
    current = {start} if start is not None else set()
    for label in labels:
        current = {nxt for st in current for lab, nxt in m.step(st) if lab == label}
    return {outcome_from(test, st) for st in current if is_final(st)}


def reachable_states(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND,
                     max_states: int = DEFAULT_MAX_STATES):
    """Every reachable state (for invariant checks in tests)."""
    m = Machine(test, loop_bound)
    start = m.settle(initial_state(test, loop_bound))
    if start is None:
        return
    seen = {start}
    frontier = deque([start])
    while frontier:
        st = frontier.popleft()
        yield st
        for _, nxt in m.step(st):
            if nxt not in seen:
                if len(seen) >= max_states:
                    raise ResourceLimit(f"more than {max_states} machine states")
                seen.add(nxt)
                frontier.append(nxt)


def op_verdict(test: LitmusTest, model: str = "tso-op", loop_bound: int = DEFAULT_LOOP_BOUND,
               max_states: int = DEFAULT_MAX_STATES, traces: bool = False) -> Verdict:
    """Outcomes of a tso-dialect test on the operational machine."""
    import time

    t0 = time.perf_counter()
    res = explore(test, loop_bound, max_states, traces, check=False)
    stats = {"states": res.states, "deadlocks": res.deadlocks,
             "time_ms": round((time.perf_counter() - t0) * 1000, 1)}
    return judge(test, model, res.outcomes, res.traces, stats, res.bound_hit)
