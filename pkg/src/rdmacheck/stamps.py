"""Stamp vocabulary, stamp assignment and the ordering tables.

The three ordering tables are kept as tab-separated text so that they can be
reviewed cell by cell against the published figures:

* ``STO_TSV``: the stamp order of the WAIT model.  ``SN`` cells hold only for
  stamps associated with the same node.
* ``IPPO_TSV`` / ``OPPO_TSV``: the issue- and observation-preserved program
  order of the declarative TSO model.  ``sqp`` cells hold only for labels on
  the same queue pair (same thread and same remote node).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

WAIT_STAMPS = ("aCR", "aCW", "aCAS", "aMF", "aWT", "nLR", "nRW", "naRR", "nRR", "nLW", "nF", "gF")
NODE_STAMPS = frozenset({"nLR", "nRW", "naRR", "nRR", "nLW", "nF", "gF"})
TSO_LABELS = ("lR", "lW", "CAS", "MF", "P", "nlR", "nrW", "narR", "narW", "nrR", "nlW", "nF")
TSO_NODE_LABELS = frozenset({"P", "nlR", "nrW", "narR", "narW", "nrR", "nlW", "nF"})

STO_TSV = """\
sto\taCR\taCW\taCAS\taMF\taWT\tnLR\tnRW\tnaRR\tnRR\tnLW\tnF\tgF
aCR\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
aCW\tN\tY\tY\tY\tN\tY\tY\tY\tY\tY\tY\tY
aCAS\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
aMF\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
aWT\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
nLR\tN\tN\tN\tN\tN\tSN\tSN\tSN\tSN\tSN\tSN\tSN
nRW\tN\tN\tN\tN\tN\tN\tSN\tSN\tSN\tSN\tN\tSN
naRR\tN\tN\tN\tN\tN\tN\tSN\tSN\tSN\tSN\tSN\tSN
nRR\tN\tN\tN\tN\tN\tN\tN\tN\tN\tSN\tSN\tSN
nLW\tN\tN\tN\tN\tN\tN\tN\tN\tN\tSN\tN\tSN
nF\tN\tN\tN\tN\tN\tSN\tSN\tSN\tSN\tSN\tSN\tSN
gF\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
"""

IPPO_TSV = """\
ippo\tlR\tlW\tCAS\tMF\tP\tnlR\tnrW\tnarR\tnarW\tnrR\tnlW\tnF
lR\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
lW\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
CAS\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
MF\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
P\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
nlR\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
nrW\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
narR\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
narW\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
nrR\tN\tN\tN\tN\tN\tN\tN\tN\tN\tN\tsqp\tsqp
nlW\tN\tN\tN\tN\tN\tN\tN\tN\tN\tN\tsqp\tsqp
nF\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
"""

OPPO_TSV = """\
oppo\tlR\tlW\tCAS\tMF\tP\tnlR\tnrW\tnarR\tnarW\tnrR\tnlW\tnF
lR\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
lW\tN\tY\tY\tY\tN\tY\tY\tY\tY\tY\tY\tY
CAS\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
MF\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
P\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY\tY
nlR\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
nrW\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tN
narR\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
narW\tN\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tN\tN
nrR\tN\tN\tN\tN\tN\tN\tN\tN\tN\tN\tsqp\tsqp
nlW\tN\tN\tN\tN\tN\tN\tN\tN\tN\tN\tsqp\tN
nF\tN\tN\tN\tN\tN\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp\tsqp
"""


def parse_table(tsv: str) -> dict[tuple[str, str], str]:
    """Parse a TSV matrix into ``{(row, column): cell}``."""
    lines = [l.split("\t") for l in tsv.strip("\n").split("\n")]
    cols = lines[0][1:]
    out = {}
    for row in lines[1:]:
        if len(row) != len(cols) + 1:
            raise ValueError(f"ragged row {row[0]!r}")
        for c, cell in zip(cols, row[1:]):
            out[(row[0], c)] = cell
    return out


STO = parse_table(STO_TSV)
IPPO = parse_table(IPPO_TSV)
OPPO = parse_table(OPPO_TSV)


@dataclass(frozen=True, order=True)
class Stamp:
    """A behaviour stamp; ``node`` is set exactly for the per-node families."""

    kind: str
    node: int | None = None

    def __post_init__(self):
        per_node = self.kind in NODE_STAMPS or self.kind in TSO_NODE_LABELS
        if per_node != (self.node is not None):
            raise ValueError(f"stamp {self.kind} node={self.node}: node must be given iff per-node")

    def __str__(self) -> str:
        return self.kind if self.node is None else f"{self.kind}_{self.node}"


def sto(a: Stamp, b: Stamp) -> bool:
    """Whether a po-earlier stamp ``a`` stays ordered before a later ``b``."""
    cell = STO[(a.kind, b.kind)]
    if cell == "SN":
        return a.node == b.node
    return cell == "Y"


def _tso_cell(table, a: Stamp, b: Stamp, same_thread: bool) -> bool:
    cell = table[(a.kind, b.kind)]
    if cell == "sqp":
        return same_thread and a.node is not None and a.node == b.node
    return cell == "Y"


def ippo_tso(a: Stamp, b: Stamp, same_thread: bool = True) -> bool:
    return _tso_cell(IPPO, a, b, same_thread)


def oppo_tso(a: Stamp, b: Stamp, same_thread: bool = True) -> bool:
    return _tso_cell(OPPO, a, b, same_thread)


def dump_tables() -> str:
    """The three matrices, as emitted by the ``dump-tables`` subcommand."""
    return STO_TSV + "\n" + IPPO_TSV + "\n" + OPPO_TSV


# ---------------------------------------------------------------------------
# Stamp assignment for WAIT-dialect and library methods


@dataclass(frozen=True)
class WriteVal:
    """Value written by a subevent: ``reads[src] + add``, or ``add`` if ``src`` is None."""

    src: int | None
    add: object = 0


@dataclass(frozen=True)
class SubSpec:
    stamp: Stamp
    loc: object = None  # location key; see ``loc_key``
    read: int | None = None  # index of the value this subevent reads
    write: WriteVal | None = None


@dataclass(frozen=True)
class Variant:
    """One admissible stamp set of a call, with its side condition.

    ``cond`` is ``None`` or ``(op, read_index, value)`` with ``op`` in
    ``{"==", "!="}``: the variant applies only if the read value satisfies it.
    """

    subs: tuple[SubSpec, ...]
    cond: tuple | None = None

    @property
    def stamps(self) -> frozenset[Stamp]:
        return frozenset(s.stamp for s in self.subs)


LIB_OF_METHOD = {
    **{m: "wait" for m in ("Read", "Write", "CAS", "Mfence", "Put", "Get", "RCAS", "RFAA", "Wait", "Rfence")},
    **{m: "brl" for m in ("BrlWrite", "BrlRead", "Bcast", "BrlWait", "GFence")},
    "AcqWL": "wlock", "RelWL": "wlock",
    "AcqSL": "slock", "RelSL": "slock",
    "AcqNL": "nlock", "RelNL": "nlock",
    **{m: "sc" for m in ("ScWrite", "ScRead", "ScCas", "ScFaa")},
}


def loc_key(lib: str, name: str, node: int | None = None):
    """Location keys: plain names for WAIT memory, tagged tuples for libraries."""
    if lib == "brl":
        return ("brl", name, node)
    if lib == "sc":
        return ("sc", name)
    return name


def const_key(value: int):
    """Key of the read-only location a constant-valued put reads from."""
    return ("#k", value)


def method_variants(method: str, args: tuple, thread_node: int, node_of, nodes: int) -> list[Variant]:
    """Subevents of one call, per admissible stamp set (the gettags table).

    ``node_of`` maps a WAIT location name (or lock name) to its node; ``nodes``
    is the number of nodes (for the all-node stamps of strong-lock release).
    """
    S = Stamp
    if method == "Read":
        (x,) = args
        return [Variant((SubSpec(S("aCR"), x, read=0),))]
    if method == "Write":
        x, v = args
        return [Variant((SubSpec(S("aCW"), x, write=WriteVal(None, v)),))]
    if method == "CAS":
        x, exp, new = args
        return [
            Variant((SubSpec(S("aCAS"), x, read=0, write=WriteVal(None, new)),), ("==", 0, exp)),
            Variant((SubSpec(S("aMF")), SubSpec(S("aCR"), x, read=0)), ("!=", 0, exp)),
        ]
    if method == "Mfence":
        return [Variant((SubSpec(S("aMF")),))]
    if method == "Wait":
        return [Variant((SubSpec(S("aWT")),))]
    if method == "Rfence":
        (n,) = args
        return [Variant((SubSpec(S("nF", n)),))]
    if method == "Get":
        x, y, _wid = args
        n = node_of(y)
        return [Variant((SubSpec(S("nRR", n), y, read=0), SubSpec(S("nLW", n), x, write=WriteVal(0))))]
    if method == "Put":
        y, x, _wid = args
        n = node_of(y)
        src = x if isinstance(x, str) else const_key(x)
        return [Variant((SubSpec(S("nLR", n), src, read=0), SubSpec(S("nRW", n), y, write=WriteVal(0))))]
    if method == "RFAA":
        x, y, add, _wid = args
        n = node_of(y)
        return [Variant((
            SubSpec(S("naRR", n), y, read=0),
            SubSpec(S("nRW", n), y, write=WriteVal(0, add)),
            SubSpec(S("nLW", n), x, write=WriteVal(0)),
        ))]
    if method == "RCAS":
        x, y, exp, new, _wid = args
        n = node_of(y)
        return [
            Variant((
                SubSpec(S("naRR", n), y, read=0),
                SubSpec(S("nRW", n), y, write=WriteVal(None, new)),
                SubSpec(S("nLW", n), x, write=WriteVal(0)),
            ), ("==", 0, exp)),
            Variant((SubSpec(S("naRR", n), y, read=0), SubSpec(S("nLW", n), x, write=WriteVal(0))),
                    ("!=", 0, exp)),
        ]
    # -- shared-variable library
    if method == "BrlWrite":
        x, v = args
        return [Variant((SubSpec(S("aCW"), loc_key("brl", x, thread_node), write=WriteVal(None, v)),))]
    if method == "BrlRead":
        (x,) = args
        return [Variant((SubSpec(S("aCR"), loc_key("brl", x, thread_node), read=0),))]
    if method == "Bcast":
        x, _wid, targets = args
        subs = []
        for i, n in enumerate(targets):
            subs.append(SubSpec(S("nLR", n), loc_key("brl", x, thread_node), read=i))
            subs.append(SubSpec(S("nRW", n), loc_key("brl", x, n), write=WriteVal(i)))
        return [Variant(tuple(subs))]
    if method == "BrlWait":
        return [Variant((SubSpec(S("aWT")),))]
    if method == "GFence":
        (targets,) = args
        return [Variant(tuple(SubSpec(S("gF", n)) for n in targets))]
    # -- locks
    if method in ("AcqWL", "AcqSL", "AcqNL"):
        return [Variant((SubSpec(S("aMF"), args[0]),))]
    if method == "RelWL":
        return [Variant((SubSpec(S("aCW"), args[0]),))]
    if method == "RelSL":
        return [Variant(tuple(SubSpec(S("gF", n), args[0]) for n in range(1, nodes + 1)))]
    if method == "RelNL":
        n = node_of(args[0])
        return [Variant((SubSpec(S("nF", n), args[0]), SubSpec(S("nRW", n), args[0])))]
    # -- SC library: every call is a single aMF subevent
    if method == "ScWrite":
        x, v = args
        return [Variant((SubSpec(S("aMF"), loc_key("sc", x), write=WriteVal(None, v)),))]
    if method == "ScRead":
        (x,) = args
        return [Variant((SubSpec(S("aMF"), loc_key("sc", x), read=0),))]
    if method == "ScCas":
        x, exp, new = args
        return [
            Variant((SubSpec(S("aMF"), loc_key("sc", x), read=0, write=WriteVal(None, new)),), ("==", 0, exp)),
            Variant((SubSpec(S("aMF"), loc_key("sc", x), read=0),), ("!=", 0, exp)),
        ]
    if method == "ScFaa":
        x, add = args
        return [Variant((SubSpec(S("aMF"), loc_key("sc", x), read=0, write=WriteVal(0, add)),))]
    raise ValueError(f"unknown method {method!r}")


def stamps_of(method: str, args: tuple, output=None, *, thread_node: int = 1, node_of=None,
              nodes: int = 2) -> set[frozenset[Stamp]]:
    """The set of admissible stamp sets of a call (gettags).

    For a CPU or SC compare-and-swap the output (the value read) selects the
    success or failure set when given.  A remote CAS always yields both sets.
    """
    node_of = node_of or (lambda name: int(str(name).rsplit("@", 1)[1]) if "@" in str(name) else 1)
    out = set()
    for v in method_variants(method, args, thread_node, node_of, nodes):
        if method in ("CAS", "ScCas") and output is not None and v.cond is not None:
            op, _, val = v.cond
            if (output == val) != (op == "=="):
                continue
        out.add(v.stamps)
    return out


def is_read(s: SubSpec) -> bool:
    return s.read is not None


def is_write(s: SubSpec) -> bool:
    return s.write is not None


def well_stamped(method: str, args: tuple, stamps: Iterable[Stamp], **kw) -> bool:
    return frozenset(stamps) in stamps_of(method, args, **kw)
