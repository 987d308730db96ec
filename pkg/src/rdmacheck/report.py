"""Verdicts: outcome sets judged against a test's assertions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .litmus import LitmusTest, holds, pretty_expr


@dataclass
class AssertionResult:
    expr: str
    expected: str  # "allowed" | "forbidden"
    observed: str
    witness: dict | None = None  # an outcome satisfying the condition, when allowed

    @property
    def passed(self) -> bool:
        return self.expected == self.observed


@dataclass
class Verdict:
    test: str
    model: str
    outcomes: list[dict]
    assertions: list[AssertionResult]
    stats: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)  # outcome tuple -> witness object
    bound_hit: bool = False  # some path was dropped at the loop bound

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def outcome_set(self) -> frozenset:
        return frozenset(tuple(sorted(o.items())) for o in self.outcomes)

    def to_json(self) -> dict:
        return {
            "test": self.test,
            "model": self.model,
            "assertions": [
                {"expr": a.expr, "expected": a.expected, "observed": a.observed,
                 **({"witness": a.witness} if a.witness is not None else {})}
                for a in self.assertions
            ],
            "outcomes": self.outcomes,
            "stats": {**self.stats, "bound_hit": self.bound_hit},
        }


def judge(test: LitmusTest, model: str, outcomes, witnesses=None, stats=None, bound_hit=False) -> Verdict:
    """Judge each assertion: allowed iff some reachable outcome satisfies it."""
    ordered = sorted(outcomes)
    results = []
    for a in test.assertions:
        hit = next((o for o in ordered if holds(test, a.cond, dict(o))), None)
        results.append(AssertionResult(pretty_expr(a.cond), a.expected,
                                       "allowed" if hit is not None else "forbidden",
                                       dict(hit) if hit is not None else None))
    return Verdict(test.name, model, [dict(o) for o in ordered], results, dict(stats or {}),
                   dict(witnesses or {}), bound_hit)


def format_verdict(v: Verdict) -> str:
    lines = []
    for a in v.assertions:
        status = "PASS" if a.passed else "FAIL"
        lines.append(f"{status} {v.test} [{v.model}] {a.expected} {a.expr}: observed {a.observed}")
    if not v.assertions:
        lines.append(f"PASS {v.test} [{v.model}] (no assertions; {len(v.outcomes)} outcomes)")
    if v.bound_hit:
        lines.append(f"NOTE {v.test}: some paths exceeded the loop bound and were not explored")
    return "\n".join(lines)


def describe_witness(w) -> str:
    """Human-readable rendering of a witness: a candidate execution or a machine trace."""
    if isinstance(w, list):
        return "\n".join(f"{i + 1:4d}  {label}" for i, label in enumerate(w))
    lines = ["events:"]
    for s in w.subs:
        e = w.events[s.ev]
        vals = "".join([f" reads {s.rval}" if s.is_read else "", f" writes {s.wval}" if s.is_write else ""])
        lines.append(f"  s{s.id}: thread {e.tid} #{s.pos} {e.method}{e.args} [{s.stamp}] loc={s.loc}{vals}")
    rf = ", ".join(f"s{w_}->s{r}" for r, w_ in sorted(w.rf.items()))
    lines.append(f"rf: {rf or '-'}")
    for loc, order in sorted(w.mo.items(), key=repr):
        lines.append(f"mo[{loc}]: " + " < ".join(f"s{i}" for i in order))
    if w.nfo:
        lines.append("nfo: " + ", ".join(f"s{a}->s{b}" for a, b in sorted(w.nfo)))
    for node, order in sorted(w.rao.items()):
        lines.append(f"rao[{node}]: " + " < ".join(f"s{i}" for i in order))
    if w.pf:
        lines.append("pf: " + ", ".join(f"s{a}->s{b}" for a, b in sorted(w.pf)))
    for lock, order in sorted(w.lo.items()):
        lines.append(f"lo[{lock}]: " + " < ".join(f"e{i}" for i in order))
    return "\n".join(lines)
