"""Litmus-test AST, textual format, pretty-printer and bounded unfolding.

A litmus file looks like::

    test fig1a
    model tso-op
    dialect tso
    nodes 2
    loc x@1 = 0
    loc z@2
    thread t1@1 {
      Put(z, x);
      Poll(2);
      x := 1
    }
    assert forbidden z == 1

Names declared with ``loc``/``brl``/``sc``/``lock``/``set`` are locations;
every other name used in a thread is a thread-local register.  Names starting
with ``_`` are auxiliary: they are used by the inliners and never appear in
reported outcomes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterator, Sequence, Union

from lark import Lark, Transformer
from lark.exceptions import LarkError, UnexpectedInput, VisitError

DIALECTS = ("wait", "tso", "library")
DEFAULT_LOOP_BOUND = 3


class LitmusError(Exception):
    """Raised for syntax errors and semantic errors in a litmus file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    """A register, or (inside assertions) a location, ``x@n`` copy or ``t.r``."""

    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - == != && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class SetEmpty:
    name: str


Expr = Union[Const, Var, BinOp, Not, SetEmpty]


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    reg: str
    expr: Expr


@dataclass(frozen=True)
class Read:
    reg: str
    loc: str


@dataclass(frozen=True)
class Write:
    loc: str
    expr: Expr


@dataclass(frozen=True)
class Cas:
    reg: str | None
    loc: str
    expected: Expr
    update: Expr


@dataclass(frozen=True)
class Mfence:
    pass


@dataclass(frozen=True)
class Put:
    remote: str
    src: Union[str, Expr]  # local location, or a value (desugared to a constant location)
    wid: str | None = None
    result: str | None = None


@dataclass(frozen=True)
class Get:
    local: str
    remote: str
    wid: str | None = None
    result: str | None = None


@dataclass(frozen=True)
class Rcas:
    local: str
    remote: str
    expected: Expr
    update: Expr
    wid: str | None = None
    result: str | None = None


@dataclass(frozen=True)
class Rfaa:
    local: str
    remote: str
    addend: Expr
    wid: str | None = None
    result: str | None = None


@dataclass(frozen=True)
class Wait:
    wid: str


@dataclass(frozen=True)
class Rfence:
    node: int


@dataclass(frozen=True)
class Poll:
    node: int
    result: str | None = None


@dataclass(frozen=True)
class GFence:
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class BrlWrite:
    loc: str
    expr: Expr


@dataclass(frozen=True)
class BrlRead:
    reg: str
    loc: str


@dataclass(frozen=True)
class Bcast:
    loc: str
    wid: str | None = None
    nodes: tuple[int, ...] | None = None  # None: every other node


@dataclass(frozen=True)
class BrlWait:
    wid: str


LOCK_METHODS = ("AcqWL", "RelWL", "AcqSL", "RelSL", "AcqNL", "RelNL")


@dataclass(frozen=True)
class LockOp:
    method: str  # one of LOCK_METHODS
    lock: str


@dataclass(frozen=True)
class ScWrite:
    loc: str
    expr: Expr


@dataclass(frozen=True)
class ScRead:
    reg: str
    loc: str


@dataclass(frozen=True)
class ScCas:
    reg: str | None
    loc: str
    expected: Expr
    update: Expr


@dataclass(frozen=True)
class ScFaa:
    reg: str | None
    loc: str
    addend: Expr


@dataclass(frozen=True)
class SetAdd:
    set: str
    expr: Expr


@dataclass(frozen=True)
class SetRemove:
    set: str
    expr: Expr


@dataclass(frozen=True)
class Assume:
    cond: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class While:
    """Loop while ``cond`` holds; at most ``loop_bound`` body executions."""

    cond: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Loop:
    """Kleene star: the body runs a nondeterministic number of times (bounded)."""

    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Choice:
    left: tuple["Stmt", ...]
    right: tuple["Stmt", ...]


Stmt = Union[
    Skip, Assign, Read, Write, Cas, Mfence, Put, Get, Rcas, Rfaa, Wait, Rfence, Poll,
    GFence, BrlWrite, BrlRead, Bcast, BrlWait, LockOp, ScWrite, ScRead, ScCas, ScFaa,
    SetAdd, SetRemove, Assume, If, While, Loop, Choice,
]

WAIT_ONLY = (Wait,)
TSO_ONLY = (Poll, SetAdd, SetRemove)
LIBRARY_ONLY = (GFence, BrlWrite, BrlRead, Bcast, BrlWait, LockOp, ScWrite, ScRead, ScCas, ScFaa)
REMOTE_OPS = (Put, Get, Rcas, Rfaa)


# ---------------------------------------------------------------------------
# Tests


@dataclass(frozen=True)
class Location:
    name: str
    node: int
    init: int = 0


@dataclass(frozen=True)
class Thread:
    name: str
    node: int
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Assertion:
    expected: str  # "allowed" | "forbidden"
    cond: Expr


@dataclass(frozen=True)
class LitmusTest:
    name: str
    nodes: int
    threads: tuple[Thread, ...]
    locs: tuple[Location, ...] = ()
    brl: tuple[Location, ...] = ()  # node field unused (0): one copy per node
    sc: tuple[Location, ...] = ()
    locks: tuple[Location, ...] = ()  # node 0 when unspecified; init unused
    sets: tuple[str, ...] = ()
    assertions: tuple[Assertion, ...] = ()
    dialect: str = "wait"
    model: str | None = None

    # -- lookups ---------------------------------------------------------
    def loc(self, name: str) -> Location:
        for l in self.locs:
            if l.name == name:
                return l
        raise KeyError(name)

    def loc_names(self) -> set[str]:
        return {l.name for l in self.locs}

    def declared_names(self) -> set[str]:
        return (
            {l.name for l in self.locs}
            | {l.name for l in self.brl}
            | {l.name for l in self.sc}
            | {l.name for l in self.locks}
            | set(self.sets)
        )

    def node_of(self, name: str) -> int:
        for group in (self.locs, self.sc, self.locks):
            for l in group:
                if l.name == name:
                    return l.node
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Grammar

GRAMMAR = r"""
start: item*

?item: header | thread | assertion

header: "test" NAME                              -> h_test
      | "model" MODEL                            -> h_model
      | "dialect" NAME                           -> h_dialect
      | "nodes" INT                              -> h_nodes
      | "loc" NAME "@" INT ("=" SIGNED_INT)?     -> h_loc
      | "brl" NAME ("=" SIGNED_INT)?             -> h_brl
      | "sc" NAME "@" INT ("=" SIGNED_INT)?      -> h_sc
      | "lock" NAME ("@" INT)?                   -> h_lock
      | "set" NAME                               -> h_set

thread: "thread" NAME "@" INT block
assertion: "assert" OUTCOME expr

block: "{" [stmt (";" stmt)*] ";"? "}"

?stmt: NAME ":=" expr                            -> s_assign
     | call                                      -> s_call
     | "mfence"                                  -> s_mfence
     | "skip"                                    -> s_skip
     | "assume" "(" expr ")"                     -> s_assume
     | "if" expr block ("else" block)?           -> s_if
     | "while" expr block                        -> s_while
     | "loop" block                              -> s_loop
     | "choice" block "or" block                 -> s_choice

call: NAME "(" [arg ("," arg)*] ")"
?arg: expr
    | "{" [INT ("," INT)*] "}"                   -> nodeset

?expr: or_expr
?or_expr: and_expr ("||" and_expr)*              -> or_
?and_expr: not_expr ("&&" not_expr)*             -> and_
?not_expr: "!" not_expr                          -> not_
         | cmp
?cmp: sum
    | sum CMPOP sum                              -> cmp_
?sum: atom
    | sum ADDOP atom                             -> add_
?atom: SIGNED_INT                                -> const
     | "-" INT                                   -> neg
     | NAME                                      -> var
     | NAME "@" INT                              -> copy_ref
     | NAME "." NAME                             -> qualified
     | call
     | "(" expr ")"

OUTCOME: "allowed" | "forbidden"
MODEL: /(wait|tso-decl|tso-op|spec:[a-z]+|impl:[a-z]+)/
CMPOP: "==" | "!=" | "="
ADDOP: "+" | "-"
NAME: /(?!(assert|thread|if|else|while|loop|choice|or|assume|mfence|skip)\b)[A-Za-z_][A-Za-z_0-9]*/

COMMENT: /(#|\/\/)[^\n]*/
%import common.INT
%import common.SIGNED_INT
%import common.WS
%ignore WS
%ignore COMMENT
"""


@dataclass(frozen=True)
class _Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class _NodeSet:
    nodes: tuple[int, ...]


class _ToRaw(Transformer):
    """First pass: lark tree to a raw structure, without semantic resolution."""

    def start(self, items):
        return list(items)

    # headers
    def h_test(self, c):
        return ("test", str(c[0]))

    def h_model(self, c):
        return ("model", str(c[0]))

    def h_dialect(self, c):
        return ("dialect", str(c[0]))

    def h_nodes(self, c):
        return ("nodes", int(c[0]))

    def h_loc(self, c):
        return ("loc", Location(str(c[0]), int(c[1]), int(c[2]) if len(c) > 2 and c[2] is not None else 0))

    def h_brl(self, c):
        return ("brl", Location(str(c[0]), 0, int(c[1]) if len(c) > 1 and c[1] is not None else 0))

    def h_sc(self, c):
        return ("sc", Location(str(c[0]), int(c[1]), int(c[2]) if len(c) > 2 and c[2] is not None else 0))

    def h_lock(self, c):
        return ("lock", Location(str(c[0]), int(c[1]) if len(c) > 1 and c[1] is not None else 0))

    def h_set(self, c):
        return ("set", str(c[0]))

    def thread(self, c):
        return ("thread", str(c[0]), int(c[1]), c[2])

    def assertion(self, c):
        return ("assert", str(c[0]), c[1])

    def block(self, c):
        return tuple(s for s in c if s is not None)

    # statements (raw)
    def s_assign(self, c):
        return ("assign", str(c[0]), c[1], c[0])

    def s_call(self, c):
        return ("call", c[0])

    def s_mfence(self, c):
        return Mfence()

    def s_skip(self, c):
        return Skip()

    def s_assume(self, c):
        return ("assume", c[0])

    def s_if(self, c):
        return ("if", c[0], c[1], c[2] if len(c) > 2 and c[2] is not None else ())

    def s_while(self, c):
        return ("while", c[0], c[1])

    def s_loop(self, c):
        return ("loop", c[0])

    def s_choice(self, c):
        return ("choice", c[0], c[1])

    def call(self, c):
        return _Call(str(c[0]), tuple(a for a in c[1:] if a is not None))

    def nodeset(self, c):
        return _NodeSet(tuple(int(x) for x in c if x is not None))

    # expressions
    def or_(self, c):
        return _fold("||", c)

    def and_(self, c):
        return _fold("&&", c)

    def not_(self, c):
        return Not(c[0])

    def cmp_(self, c):
        op = "==" if str(c[1]) == "=" else str(c[1])
        return BinOp(op, c[0], c[2])

    def add_(self, c):
        return BinOp(str(c[1]), c[0], c[2])

    def const(self, c):
        return Const(int(c[0]))

    def neg(self, c):
        return Const(-int(c[0]))

    def var(self, c):
        return Var(str(c[0]))

    def copy_ref(self, c):
        return Var(f"{c[0]}@{int(c[1])}")

    def qualified(self, c):
        return Var(f"{c[0]}.{c[1]}")


def _fold(op: str, items: Sequence[Expr]) -> Expr:
    out = items[0]
    for it in items[1:]:
        out = BinOp(op, out, it)
    return out


_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True)


def parse_litmus(text: str) -> LitmusTest:
    """Parse a litmus file and check it is well-formed."""
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        raise LitmusError(f"syntax error: {exc.__class__.__name__}", exc.line, exc.column) from None
    except LarkError as exc:  # pragma: no cover - defensive
        raise LitmusError(f"syntax error: {exc}") from None
    try:
        raw = _ToRaw().transform(tree)
    except VisitError as exc:  # pragma: no cover - defensive
        raise LitmusError(f"malformed input: {exc.orig_exc}") from None
    return _Resolver(raw).build()


def load_litmus(path) -> LitmusTest:
    with open(path, encoding="utf-8") as fh:
        return parse_litmus(fh.read())


class _Resolver:
    """Second pass: resolve names and method calls into typed statements."""

    def __init__(self, raw: list):
        self.raw = raw
        self.header: dict = {"name": "anon", "nodes": None, "dialect": None, "model": None}
        self.locs: list[Location] = []
        self.brl: list[Location] = []
        self.sc: list[Location] = []
        self.locks: list[Location] = []
        self.sets: list[str] = []
        self.threads_raw: list = []
        self.asserts_raw: list = []

    def build(self) -> LitmusTest:
        for item in self.raw:
            kind = item[0]
            if kind in ("test",):
                self.header["name"] = item[1]
            elif kind == "model":
                self.header["model"] = item[1]
            elif kind == "dialect":
                if item[1] not in DIALECTS:
                    raise LitmusError(f"unknown dialect {item[1]!r}")
                self.header["dialect"] = item[1]
            elif kind == "nodes":
                self.header["nodes"] = item[1]
            elif kind == "loc":
                self.locs.append(item[1])
            elif kind == "brl":
                self.brl.append(item[1])
            elif kind == "sc":
                self.sc.append(item[1])
            elif kind == "lock":
                self.locks.append(item[1])
            elif kind == "set":
                self.sets.append(item[1])
            elif kind == "thread":
                self.threads_raw.append(item)
            elif kind == "assert":
                self.asserts_raw.append(item)
        names = [l.name for l in self.locs + self.brl + self.sc + self.locks] + self.sets
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise LitmusError(f"duplicate declaration: {sorted(dup)}")
        self.declared = set(names)
        threads = []
        tnames = set()
        for _, tname, node, body in self.threads_raw:
            if tname in tnames:
                raise LitmusError(f"duplicate thread {tname!r}")
            tnames.add(tname)
            self.cur_node = node
            self.assigned = set()
            _collect_assigned(body, self.assigned)
            threads.append(Thread(tname, node, self._block(body)))
        nodes = self.header["nodes"]
        if nodes is None:
            used = [t.node for t in threads] + [l.node for l in self.locs + self.sc + self.locks]
            nodes = max(used, default=1)
        dialect = self.header["dialect"] or _infer_dialect(threads)
        test = LitmusTest(
            name=self.header["name"],
            nodes=nodes,
            threads=tuple(threads),
            locs=tuple(self.locs),
            brl=tuple(self.brl),
            sc=tuple(self.sc),
            locks=tuple(self.locks),
            sets=tuple(self.sets),
            assertions=tuple(Assertion(e, c) for _, e, c in self.asserts_raw),
            dialect=dialect,
            model=self.header["model"],
        )
        check_test(test)
        return test

    # -- statements -----------------------------------------------------
    def _block(self, body) -> tuple[Stmt, ...]:
        return tuple(self._stmt(s) for s in body)

    def _stmt(self, s) -> Stmt:
        if not isinstance(s, tuple):
            return s
        kind = s[0]
        if kind == "assign":
            _, target, rhs, tok = s
            if isinstance(rhs, _Call) and rhs.name != "SetIsEmpty":
                return self._call(rhs, target)
            rhs = _resolve_expr(rhs)
            if target in self.declared:
                return Write(target, rhs)
            if isinstance(rhs, Var) and rhs.name in self.declared:
                return Read(target, rhs.name)
            return Assign(target, rhs)
        if kind == "call":
            return self._call(s[1], None)
        if kind == "assume":
            return Assume(_resolve_expr(s[1]))
        if kind == "if":
            return If(_resolve_expr(s[1]), self._block(s[2]), self._block(s[3]))
        if kind == "while":
            return While(_resolve_expr(s[1]), self._block(s[2]))
        if kind == "loop":
            return Loop(self._block(s[1]))
        if kind == "choice":
            return Choice(self._block(s[1]), self._block(s[2]))
        raise LitmusError(f"unknown statement {s!r}")  # pragma: no cover

    def _call(self, call: _Call, result: str | None) -> Stmt:
        name = call.name
        args = tuple(a if isinstance(a, _NodeSet) else _resolve_expr(a) for a in call.args)
        n = len(args)

        def name_arg(i) -> str:
            a = args[i]
            if not isinstance(a, Var):
                raise LitmusError(f"{name}: argument {i + 1} must be a name")
            return a.name

        def opt_wid(i) -> str | None:
            if n <= i or name_arg(i) == "_":
                return None
            return name_arg(i)

        def int_arg(i) -> int:
            a = args[i]
            if not isinstance(a, Const):
                raise LitmusError(f"{name}: argument {i + 1} must be an integer")
            return a.value

        def nodes_arg(i) -> tuple[int, ...]:
            a = args[i]
            if isinstance(a, _NodeSet):
                return a.nodes
            if isinstance(a, Const):
                return (a.value,)
            raise LitmusError(f"{name}: argument {i + 1} must be a node set")

        def arity(lo, hi=None):
            hi = lo if hi is None else hi
            if not lo <= n <= hi:
                raise LitmusError(f"{name}: expected {lo}..{hi} arguments, got {n}")

        if name == "CAS":
            arity(3)
            return Cas(result, name_arg(0), args[1], args[2])
        if name == "Put":
            arity(2, 3)
            src = args[1]
            src_v = src.name if isinstance(src, Var) and src.name in self.declared else src
            if isinstance(src_v, Var) and src_v.name not in self.assigned:
                raise LitmusError(f"Put: undeclared location {src_v.name!r}")
            return Put(name_arg(0), src_v, opt_wid(2), result)
        if name == "Get":
            arity(2, 3)
            return Get(name_arg(0), name_arg(1), opt_wid(2), result)
        if name == "Rcas":
            arity(4, 5)
            return Rcas(name_arg(0), name_arg(1), args[2], args[3], opt_wid(4), result)
        if name == "Rfaa":
            arity(3, 4)
            return Rfaa(name_arg(0), name_arg(1), args[2], opt_wid(3), result)
        if name == "Wait":
            arity(1)
            return Wait(name_arg(0))
        if name == "Rfence":
            arity(1)
            return Rfence(int_arg(0))
        if name == "Poll":
            arity(1)
            return Poll(int_arg(0), result)
        if name == "GFence":
            arity(1)
            return GFence(nodes_arg(0))
        if name == "BrlWrite":
            arity(2)
            return BrlWrite(name_arg(0), args[1])
        if name == "BrlRead":
            arity(1)
            return BrlRead(self._need_result(name, result), name_arg(0))
        if name == "Bcast":
            arity(1, 3)
            return Bcast(name_arg(0), opt_wid(1), nodes_arg(2) if n > 2 else None)
        if name == "BrlWait":
            arity(1)
            return BrlWait(name_arg(0))
        if name in LOCK_METHODS:
            arity(1)
            return LockOp(name, name_arg(0))
        if name == "ScWrite":
            arity(2)
            return ScWrite(name_arg(0), args[1])
        if name == "ScRead":
            arity(1)
            return ScRead(self._need_result(name, result), name_arg(0))
        if name == "ScCas":
            arity(3)
            return ScCas(result, name_arg(0), args[1], args[2])
        if name == "ScFaa":
            arity(2)
            return ScFaa(result, name_arg(0), args[1])
        if name == "SetAdd":
            arity(2)
            return SetAdd(name_arg(0), args[1])
        if name == "SetRemove":
            arity(2)
            return SetRemove(name_arg(0), args[1])
        raise LitmusError(f"unknown method {name!r}")

    @staticmethod
    def _need_result(name: str, result: str | None) -> str:
        if result is None:
            raise LitmusError(f"{name} must be assigned to a register")
        return result


def _resolve_expr(e):
    """Turn ``SetIsEmpty(s)`` calls into :class:`SetEmpty`; reject other calls."""
    if isinstance(e, _Call):
        if e.name == "SetIsEmpty" and len(e.args) == 1 and isinstance(e.args[0], Var):
            return SetEmpty(e.args[0].name)
        raise LitmusError(f"{e.name}(...) cannot be used inside an expression")
    if isinstance(e, BinOp):
        return BinOp(e.op, _resolve_expr(e.left), _resolve_expr(e.right))
    if isinstance(e, Not):
        return Not(_resolve_expr(e.arg))
    return e


def _collect_assigned(body, out: set) -> None:
    for s in body:
        if isinstance(s, tuple):
            if s[0] == "assign":
                out.add(s[1])
            for part in s[1:]:
                if isinstance(part, tuple) and part and not isinstance(part[0], str):
                    _collect_assigned(part, out)


def _infer_dialect(threads: Sequence[Thread]) -> str:
    kinds = set()
    for t in threads:
        for s in walk(t.body):
            kinds.add(type(s))
    if any(k in kinds for k in TSO_ONLY):
        return "tso"
    if any(k in kinds for k in LIBRARY_ONLY):
        return "library"
    return "wait"


def walk(body: Sequence[Stmt]) -> Iterator[Stmt]:
    """Yield every statement of a body, including nested ones."""
    for s in body:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)
        elif isinstance(s, (While, Loop)):
            yield from walk(s.body)
        elif isinstance(s, Choice):
            yield from walk(s.left)
            yield from walk(s.right)


# ---------------------------------------------------------------------------
# Semantic checks


def registers_of(thread: Thread) -> list[str]:
    """Registers assigned by a thread, in first-assignment order."""
    regs: list[str] = []

    def add(r):
        if r is not None and r not in regs:
            regs.append(r)

    for s in walk(thread.body):
        if isinstance(s, (Assign, Read, BrlRead, ScRead)):
            add(s.reg)
        elif isinstance(s, (Cas, ScCas, ScFaa)):
            add(s.reg)
        elif isinstance(s, (Put, Get, Rcas, Rfaa, Poll)):
            add(s.result)
    return regs


def wids_of(thread: Thread) -> set[str]:
    out = set()
    for s in walk(thread.body):
        if isinstance(s, (Put, Get, Rcas, Rfaa, Bcast)) and s.wid is not None:
            out.add(s.wid)
        elif isinstance(s, (Wait, BrlWait)):
            out.add(s.wid)
    return out


def check_test(test: LitmusTest) -> None:
    """Raise :class:`LitmusError` if the test violates a static rule."""
    locs = test.loc_names()
    brl = {l.name for l in test.brl}
    sc = {l.name for l in test.sc}
    locks = {l.name for l in test.locks}
    sets = set(test.sets)
    for l in test.locs + test.sc:
        if not 1 <= l.node <= test.nodes:
            raise LitmusError(f"location {l.name!r} on unknown node {l.node}")
    for t in test.threads:
        if not 1 <= t.node <= test.nodes:
            raise LitmusError(f"thread {t.name!r} on unknown node {t.node}")
        regs = set(registers_of(t))
        clash = regs & test.declared_names()
        if clash:
            raise LitmusError(f"thread {t.name}: register name clashes with declaration {sorted(clash)}")
        for s in walk(t.body):
            _check_stmt(test, t, s, locs, brl, sc, locks, sets)
    for a in test.assertions:
        for v in expr_vars(a.cond):
            resolve_outcome_name(test, v)


def _check_stmt(test, t, s, locs, brl, sc, locks, sets) -> None:
    def need(name, pool, what):
        if name not in pool:
            raise LitmusError(f"thread {t.name}: undeclared {what} {name!r}")

    def local(name):
        need(name, locs, "location")
        if test.loc(name).node != t.node:
            raise LitmusError(
                f"thread {t.name}@{t.node}: {name!r} lives on node {test.loc(name).node}, not local")

    if test.dialect == "tso" and isinstance(s, WAIT_ONLY + LIBRARY_ONLY):
        raise LitmusError(f"dialect mismatch: {type(s).__name__} in a tso-dialect test")
    if test.dialect in ("wait", "library") and isinstance(s, TSO_ONLY):
        raise LitmusError(f"dialect mismatch: {type(s).__name__} in a {test.dialect}-dialect test")
    if test.dialect == "wait" and isinstance(s, LIBRARY_ONLY):
        raise LitmusError(f"dialect mismatch: {type(s).__name__} needs the library dialect")
    if test.dialect != "tso" and isinstance(s, REMOTE_OPS) and s.result is not None:
        raise LitmusError("operation identifiers are only available in the tso dialect")
    if isinstance(s, (Read, Write, Cas)):
        local(s.loc)
    elif isinstance(s, Put):
        need(s.remote, locs, "location")
        if isinstance(s.src, str):
            local(s.src)
    elif isinstance(s, (Get, Rcas, Rfaa)):
        local(s.local)
        need(s.remote, locs, "location")
    elif isinstance(s, (Rfence, Poll)):
        if not 1 <= s.node <= test.nodes:
            raise LitmusError(f"unknown node {s.node}")
    elif isinstance(s, (GFence,)):
        for n in s.nodes:
            if not 1 <= n <= test.nodes:
                raise LitmusError(f"unknown node {n}")
    elif isinstance(s, (BrlWrite, BrlRead, Bcast)):
        need(s.loc, brl, "shared variable")
    elif isinstance(s, LockOp):
        need(s.lock, locks, "lock")
        if s.method.endswith("NL"):
            if next(l for l in test.locks if l.name == s.lock).node == 0:
                raise LitmusError(f"node lock {s.lock!r} needs a home node (lock {s.lock}@n)")
    elif isinstance(s, (ScWrite, ScRead, ScCas, ScFaa)):
        need(s.loc, sc, "SC location")
    elif isinstance(s, (SetAdd, SetRemove)):
        need(s.set, sets, "set")


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Not):
        return expr_vars(e.arg)
    return set()


def outcome_keys(test: LitmusTest) -> list[str]:
    """Names that make up a final outcome (auxiliary names excluded)."""
    keys = []
    for t in test.threads:
        keys += [f"{t.name}.{r}" for r in registers_of(t) if not r.startswith("_")]
    keys += [l.name for l in test.locs if not l.name.startswith("_")]
    keys += [l.name for l in test.sc if not l.name.startswith("_")]
    for l in test.brl:
        if not l.name.startswith("_"):
            keys += [f"{l.name}@{n}" for n in range(1, test.nodes + 1)]
    return keys


def resolve_outcome_name(test: LitmusTest, name: str) -> str:
    """Map a name used in an assertion to an outcome key."""
    keys = outcome_keys(test)
    if name in keys:
        return name
    matches = [k for k in keys if "." in k and k.split(".", 1)[1] == name]
    if len(matches) == 1:
        return matches[0]
    if len(matches) > 1:
        raise LitmusError(f"ambiguous register {name!r}: qualify it as one of {matches}")
    raise LitmusError(f"assertion references undeclared name {name!r}")


def eval_expr(e: Expr, env) -> int | bool:
    """Evaluate a closed expression; ``env`` maps names to values."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Not):
        return not eval_expr(e.arg, env)
    if isinstance(e, SetEmpty):
        return env[("set", e.name)]
    l = eval_expr(e.left, env)
    if e.op == "&&":
        return bool(l) and bool(eval_expr(e.right, env))
    if e.op == "||":
        return bool(l) or bool(eval_expr(e.right, env))
    r = eval_expr(e.right, env)
    return {"+": lambda: l + r, "-": lambda: l - r, "==": lambda: l == r, "!=": lambda: l != r}[e.op]()


def holds(test: LitmusTest, cond: Expr, outcome: dict) -> bool:
    """Evaluate an assertion condition over one outcome (a key->value dict)."""
    env = {v: outcome[resolve_outcome_name(test, v)] for v in expr_vars(cond)}
    return bool(eval_expr(cond, env))


# ---------------------------------------------------------------------------
# Pretty-printer


def pretty_expr(e: Expr, prec: int = 0) -> str:
    levels = {"||": 1, "&&": 2, "==": 3, "!=": 3, "+": 4, "-": 4}
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, SetEmpty):
        return f"SetIsEmpty({e.name})"
    if isinstance(e, Not):
        return "!" + pretty_expr(e.arg, 5)
    p = levels[e.op]
    # binary operators are left-associative; comparisons do not chain
    left_prec = p + 1 if e.op in ("==", "!=") else p
    text = f"{pretty_expr(e.left, left_prec)} {e.op} {pretty_expr(e.right, p + 1)}"
    return f"({text})" if p < prec else text


def _nodes(ns: tuple[int, ...]) -> str:
    return "{" + ", ".join(str(n) for n in ns) + "}"


def _args(*parts) -> str:
    return ", ".join(p for p in parts if p is not None)


def _res(result: str | None, text: str) -> str:
    return f"{result} := {text}" if result is not None else text


def pretty_stmt(s: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    E = pretty_expr
    if isinstance(s, Skip):
        return [pad + "skip"]
    if isinstance(s, Assign):
        return [pad + f"{s.reg} := {E(s.expr)}"]
    if isinstance(s, Read):
        return [pad + f"{s.reg} := {s.loc}"]
    if isinstance(s, Write):
        return [pad + f"{s.loc} := {E(s.expr)}"]
    if isinstance(s, Cas):
        return [pad + _res(s.reg, f"CAS({s.loc}, {E(s.expected)}, {E(s.update)})")]
    if isinstance(s, Mfence):
        return [pad + "mfence"]
    if isinstance(s, Put):
        src = s.src if isinstance(s.src, str) else E(s.src)
        return [pad + _res(s.result, f"Put({_args(s.remote, src, s.wid)})")]
    if isinstance(s, Get):
        return [pad + _res(s.result, f"Get({_args(s.local, s.remote, s.wid)})")]
    if isinstance(s, Rcas):
        return [pad + _res(s.result, f"Rcas({_args(s.local, s.remote, E(s.expected), E(s.update), s.wid)})")]
    if isinstance(s, Rfaa):
        return [pad + _res(s.result, f"Rfaa({_args(s.local, s.remote, E(s.addend), s.wid)})")]
    if isinstance(s, Wait):
        return [pad + f"Wait({s.wid})"]
    if isinstance(s, Rfence):
        return [pad + f"Rfence({s.node})"]
    if isinstance(s, Poll):
        return [pad + _res(s.result, f"Poll({s.node})")]
    if isinstance(s, GFence):
        return [pad + f"GFence({_nodes(s.nodes)})"]
    if isinstance(s, BrlWrite):
        return [pad + f"BrlWrite({s.loc}, {E(s.expr)})"]
    if isinstance(s, BrlRead):
        return [pad + f"{s.reg} := BrlRead({s.loc})"]
    if isinstance(s, Bcast):
        if s.nodes is not None:
            return [pad + f"Bcast({s.loc}, {s.wid if s.wid else '_'}, {_nodes(s.nodes)})"]
        return [pad + f"Bcast({_args(s.loc, s.wid)})"]
    if isinstance(s, BrlWait):
        return [pad + f"BrlWait({s.wid})"]
    if isinstance(s, LockOp):
        return [pad + f"{s.method}({s.lock})"]
    if isinstance(s, ScWrite):
        return [pad + f"ScWrite({s.loc}, {E(s.expr)})"]
    if isinstance(s, ScRead):
        return [pad + f"{s.reg} := ScRead({s.loc})"]
    if isinstance(s, ScCas):
        return [pad + _res(s.reg, f"ScCas({s.loc}, {E(s.expected)}, {E(s.update)})")]
    if isinstance(s, ScFaa):
        return [pad + _res(s.reg, f"ScFaa({s.loc}, {E(s.addend)})")]
    if isinstance(s, SetAdd):
        return [pad + f"SetAdd({s.set}, {E(s.expr)})"]
    if isinstance(s, SetRemove):
        return [pad + f"SetRemove({s.set}, {E(s.expr)})"]
    if isinstance(s, Assume):
        return [pad + f"assume({E(s.cond)})"]
    if isinstance(s, If):
        out = [pad + f"if {E(s.cond)} {{"] + pretty_body(s.then, indent + 1)
        if s.orelse:
            out += [pad + "} else {"] + pretty_body(s.orelse, indent + 1)
        return out + [pad + "}"]
    if isinstance(s, While):
        return [pad + f"while {E(s.cond)} {{"] + pretty_body(s.body, indent + 1) + [pad + "}"]
    if isinstance(s, Loop):
        return [pad + "loop {"] + pretty_body(s.body, indent + 1) + [pad + "}"]
    if isinstance(s, Choice):
        return ([pad + "choice {"] + pretty_body(s.left, indent + 1) + [pad + "} or {"]
                + pretty_body(s.right, indent + 1) + [pad + "}"])
    raise TypeError(f"unknown statement {s!r}")  # pragma: no cover


def pretty_body(body: Sequence[Stmt], indent: int) -> list[str]:
    lines: list[str] = []
    for i, s in enumerate(body):
        chunk = pretty_stmt(s, indent)
        if i < len(body) - 1:
            chunk[-1] += ";"
        lines += chunk
    return lines


def pretty(test: LitmusTest) -> str:
    """Render a test in the litmus grammar; ``parse_litmus`` inverts it."""
    out = [f"test {test.name}"]
    if test.model:
        out.append(f"model {test.model}")
    out.append(f"dialect {test.dialect}")
    out.append(f"nodes {test.nodes}")
    for l in test.locs:
        out.append(f"loc {l.name}@{l.node} = {l.init}")
    for l in test.brl:
        out.append(f"brl {l.name} = {l.init}")
    for l in test.sc:
        out.append(f"sc {l.name}@{l.node} = {l.init}")
    for l in test.locks:
        out.append(f"lock {l.name}@{l.node}" if l.node else f"lock {l.name}")
    for s in test.sets:
        out.append(f"set {s}")
    for t in test.threads:
        out.append(f"thread {t.name}@{t.node} {{")
        out += pretty_body(t.body, 1)
        out.append("}")
    for a in test.assertions:
        out.append(f"assert {a.expected} {pretty_expr(a.cond)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Value domain and concrete unfolding


def constants_of(test: LitmusTest) -> set[int]:
    out = {0}
    for l in test.locs + test.brl + test.sc:
        out.add(l.init)

    def exprs(s):
        for f in ("expr", "expected", "update", "addend", "cond"):
            v = getattr(s, f, None)
            if v is not None and not isinstance(v, (str, tuple)):
                yield v
        if isinstance(s, Put) and not isinstance(s.src, str):
            yield s.src

    def consts(e):
        if isinstance(e, Const):
            yield e.value
        elif isinstance(e, BinOp):
            yield from consts(e.left)
            yield from consts(e.right)
        elif isinstance(e, Not):
            yield from consts(e.arg)

    for t in test.threads:
        for s in walk(t.body):
            for e in exprs(s):
                out.update(consts(e))
    return out


def value_domain(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND) -> tuple[int, ...]:
    """Constants of the test and 0, closed under the additions the test can perform.

    Fetch-and-add and ``v + c`` style register arithmetic can create values that
    are not literals; the closure adds every sum reachable with at most as many
    additions as the program can execute.
    """
    base = constants_of(test)
    addends: set[int] = set()
    steps = 0
    for t in test.threads:
        for s in walk(t.body):
            if isinstance(s, (Rfaa, ScFaa)) and isinstance(s.addend, Const):
                addends.add(s.addend.value)
                steps += loop_bound + 1
            for e in _all_exprs(s):
                for sub in _binops(e):
                    if sub.op in ("+", "-") and isinstance(sub.right, Const):
                        addends.add(sub.right.value if sub.op == "+" else -sub.right.value)
                        steps += loop_bound + 1
    dom = set(base)
    for _ in range(min(steps, 6)):
        dom |= {v + a for v in dom for a in addends}
    return tuple(sorted(dom))


def _all_exprs(s):
    for f in ("expr", "expected", "update", "addend", "cond"):
        v = getattr(s, f, None)
        if isinstance(v, (Const, Var, BinOp, Not, SetEmpty)):
            yield v


def _binops(e):
    if isinstance(e, BinOp):
        yield e
        yield from _binops(e.left)
        yield from _binops(e.right)
    elif isinstance(e, Not):
        yield from _binops(e.arg)


@dataclass(frozen=True)
class Event:
    """One method-call instance of a plain execution.

    ``reads`` lists the values returned by the call's read parts (e.g. the NIC
    local read of a put), in the order the stamps module lists them.
    """

    tid: int
    eid: int
    method: str
    args: tuple
    output: int | None = None
    reads: tuple[int, ...] = ()


@dataclass(frozen=True)
class PlainExecution:
    events: tuple[Event, ...]
    final_regs: tuple[tuple[str, int], ...] = ()  # ("thread.reg", value) pairs

    @property
    def po(self) -> set[tuple[int, int]]:
        out = set()
        for a in self.events:
            for b in self.events:
                if a.tid == b.tid and a.eid < b.eid:
                    out.add((a.eid, b.eid))
        return out

    def thread(self, tid: int) -> tuple[Event, ...]:
        return tuple(e for e in self.events if e.tid == tid)


class _PathCut(Exception):
    pass


def unfold(test: LitmusTest, loop_bound: int = DEFAULT_LOOP_BOUND,
           domain: Sequence[int] | None = None) -> Iterator[PlainExecution]:
    """Enumerate plain executions: every choice, loop count and read value.

    Reads (including the implicit read parts of remote operations) return every
    value of ``domain`` (default: :func:`value_domain`).  Paths that need more
    than ``loop_bound`` loop iterations are dropped.
    """
    dom = tuple(domain) if domain is not None else value_domain(test, loop_bound)
    per_thread = [list(unfold_thread(test, i, loop_bound, dom)) for i in range(len(test.threads))]
    for combo in itertools.product(*per_thread):
        events = []
        regs = []
        eid = 0
        for tid, (trace, env) in enumerate(combo):
            for ev in trace:
                events.append(replace(ev, eid=eid))
                eid += 1
            regs += [(f"{test.threads[tid].name}.{r}", v) for r, v in env.items()]
        yield PlainExecution(tuple(events), tuple(sorted(regs)))


def unfold_thread(test: LitmusTest, tid: int, loop_bound: int, dom: Sequence[int]):
    """Yield ``(events, registers)`` for every concrete run of one thread."""
    thread = test.threads[tid]
    regs0 = {r: 0 for r in registers_of(thread)}
    state = _ConcreteState(test, tid, loop_bound, dom)
    for events, env in state.run(list(thread.body), (), dict(regs0), {}, 0):
        yield events, {k: v for k, v in env.items() if isinstance(k, str)}


class _ConcreteState:
    """Concrete interpreter enumerating read values over a finite domain.

    ``env`` holds registers and, under ``("set", name)``, the thread-local
    multisets of the tso dialect.  Operation identifiers are computed the same
    way as in the symbolic engine: ``1000 * (tid + 1) + k`` for the k-th remote
    operation of the thread.
    """

    def __init__(self, test, tid, bound, dom):
        self.test = test
        self.tid = tid
        self.bound = bound
        self.dom = dom

    def run(self, stmts: list, events: tuple, env: dict, polls: dict, nops: int):
        if not stmts:
            yield events, env
            return
        s, rest = stmts[0], stmts[1:]
        for ev, env2, stmts2, polls2, nops2 in self.step(s, env, polls, nops):
            yield from self.run(stmts2 + rest, events + tuple(ev), env2, polls2, nops2)

    def ev(self, method, args, output=None, reads=()):
        return Event(self.tid, -1, method, tuple(args), output, tuple(reads))

    def val(self, e, env):
        return eval_expr(e, {**{k: v for k, v in env.items()}, **self._sets(env)})

    def _sets(self, env):
        return {("set", s): not env.get(("set", s)) for s in self.test.sets}

    def step(self, s, env, polls, nops):
        V = lambda e: self.val(e, env)
        t = self.test
        if isinstance(s, Skip):
            yield [], env, [], polls, nops
        elif isinstance(s, Assign):
            yield [], {**env, s.reg: V(s.expr)}, [], polls, nops
        elif isinstance(s, Read):
            for v in self.dom:
                yield [self.ev("Read", (s.loc,), v, (v,))], {**env, s.reg: v}, [], polls, nops
        elif isinstance(s, Write):
            yield [self.ev("Write", (s.loc, V(s.expr)))], env, [], polls, nops
        elif isinstance(s, Cas):
            exp, new = V(s.expected), V(s.update)
            for v in self.dom:
                env2 = {**env, s.reg: v} if s.reg else env
                yield [self.ev("CAS", (s.loc, exp, new), v, (v,))], env2, [], polls, nops
        elif isinstance(s, Mfence):
            yield [self.ev("Mfence", ())], env, [], polls, nops
        elif isinstance(s, (Put, Get, Rcas, Rfaa)):
            op_id = 1000 * (self.tid + 1) + nops
            node = t.loc(s.remote).node
            env1 = {**env, s.result: op_id} if s.result else env
            pend = dict(polls)
            pend[node] = pend.get(node, ()) + (op_id,)
            if isinstance(s, Put):
                src = s.src if isinstance(s.src, str) else V(s.src)
                for v in (self.dom if isinstance(src, str) else (src,)):
                    yield [self.ev("Put", (s.remote, src, s.wid), op_id, (v,))], env1, [], pend, nops + 1
            elif isinstance(s, Get):
                for v in self.dom:
                    yield [self.ev("Get", (s.local, s.remote, s.wid), op_id, (v,))], env1, [], pend, nops + 1
            elif isinstance(s, Rcas):
                exp, new = V(s.expected), V(s.update)
                for v in self.dom:
                    yield ([self.ev("RCAS", (s.local, s.remote, exp, new, s.wid), op_id, (v,))],
                           env1, [], pend, nops + 1)
            else:
                add = V(s.addend)
                for v in self.dom:
                    yield [self.ev("RFAA", (s.local, s.remote, add, s.wid), op_id, (v,))], env1, [], pend, nops + 1
        elif isinstance(s, Wait):
            yield [self.ev("Wait", (s.wid,))], env, [], polls, nops
        elif isinstance(s, Rfence):
            yield [self.ev("Rfence", (s.node,))], env, [], polls, nops
        elif isinstance(s, Poll):
            queue = polls.get(s.node, ())
            if not queue:
                return  # nothing to poll: the poll can never complete
            pend = {**polls, s.node: queue[1:]}
            env2 = {**env, s.result: queue[0]} if s.result else env
            yield [self.ev("Poll", (s.node,), queue[0])], env2, [], pend, nops
        elif isinstance(s, GFence):
            yield [self.ev("GFence", (s.nodes,))], env, [], polls, nops
        elif isinstance(s, BrlWrite):
            yield [self.ev("BrlWrite", (s.loc, V(s.expr)))], env, [], polls, nops
        elif isinstance(s, BrlRead):
            for v in self.dom:
                yield [self.ev("BrlRead", (s.loc,), v, (v,))], {**env, s.reg: v}, [], polls, nops
        elif isinstance(s, Bcast):
            targets = bcast_targets(t, t.threads[self.tid].node, s)
            if not targets:
                yield [], env, [], polls, nops
                return
            for vs in itertools.product(self.dom, repeat=len(targets)):
                yield [self.ev("Bcast", (s.loc, s.wid, targets), None, vs)], env, [], polls, nops
        elif isinstance(s, BrlWait):
            yield [self.ev("BrlWait", (s.wid,))], env, [], polls, nops
        elif isinstance(s, LockOp):
            yield [self.ev(s.method, (s.lock,))], env, [], polls, nops
        elif isinstance(s, ScWrite):
            yield [self.ev("ScWrite", (s.loc, V(s.expr)))], env, [], polls, nops
        elif isinstance(s, ScRead):
            for v in self.dom:
                yield [self.ev("ScRead", (s.loc,), v, (v,))], {**env, s.reg: v}, [], polls, nops
        elif isinstance(s, ScCas):
            exp, new = V(s.expected), V(s.update)
            for v in self.dom:
                env2 = {**env, s.reg: v} if s.reg else env
                yield [self.ev("ScCas", (s.loc, exp, new), v, (v,))], env2, [], polls, nops
        elif isinstance(s, ScFaa):
            add = V(s.addend)
            for v in self.dom:
                env2 = {**env, s.reg: v} if s.reg else env
                yield [self.ev("ScFaa", (s.loc, add), v, (v,))], env2, [], polls, nops
        elif isinstance(s, SetAdd):
            key = ("set", s.set)
            yield [], {**env, key: tuple(sorted(env.get(key, ()) + (V(s.expr),)))}, [], polls, nops
        elif isinstance(s, SetRemove):
            key = ("set", s.set)
            cur = list(env.get(key, ()))
            v = V(s.expr)
            if v in cur:
                cur.remove(v)
            yield [], {**env, key: tuple(cur)}, [], polls, nops
        elif isinstance(s, Assume):
            if V(s.cond):
                yield [], env, [], polls, nops
        elif isinstance(s, If):
            yield [], env, list(s.then if V(s.cond) else s.orelse), polls, nops
        elif isinstance(s, While):
            yield [], env, [_BoundedWhile(s, self.bound)], polls, nops
        elif isinstance(s, _BoundedWhile):
            if V(s.loop.cond):
                if s.left > 0:
                    yield [], env, list(s.loop.body) + [_BoundedWhile(s.loop, s.left - 1)], polls, nops
            else:
                yield [], env, [], polls, nops
        elif isinstance(s, Loop):
            for k in range(self.bound + 1):
                yield [], env, list(s.body) * k, polls, nops
        elif isinstance(s, Choice):
            yield [], env, list(s.left), polls, nops
            yield [], env, list(s.right), polls, nops
        else:  # pragma: no cover
            raise TypeError(f"unknown statement {s!r}")


@dataclass(frozen=True)
class _BoundedWhile:
    loop: While
    left: int


def bcast_targets(test: LitmusTest, node: int, s: Bcast) -> tuple[int, ...]:
    if s.nodes is not None:
        return tuple(s.nodes)
    return tuple(n for n in range(1, test.nodes + 1) if n != node)
