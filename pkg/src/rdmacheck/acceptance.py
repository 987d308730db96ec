"""The ten acceptance criteria as runnable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`.  The pytest suite in
``tests/test_acceptance.py`` and ``scripts/run_acceptance.py`` both call these
functions, so the printed report and the test verdicts cannot drift apart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from . import lib_impls, models, op_sim, tso_decl, wait_model
from .exec_enum import brute_force_outcomes
from .litmus import LitmusTest, LockOp, load_litmus, parse_litmus, pretty, walk
from .randgen import GenConfig, random_test
from .stamps import IPPO_TSV, OPPO_TSV, STO_TSV, TSO_LABELS, TSO_NODE_LABELS, Stamp, ippo_tso, oppo_tso

ROOT = Path(__file__).resolve().parents[2]
CORPUS = ROOT / "corpus"
GOLDEN = ROOT / "tests" / "golden"

# Loop bound for programs with inlined lock spin loops (see the decisions ledger).
INLINED_LOOP_BOUND = 2
INLINED_MAX_CANDIDATES = 10**7


@dataclass
class AcceptanceConfig:
    corpus: Path = CORPUS
    golden: Path = GOLDEN
    random_programs: int = 200  # criterion 9
    random_max_events: int = 8
    oracle_seeds: int = 1000  # criterion 10c, per dialect
    oracle_max_labels: int = 8
    invariant_programs: int = 50  # criterion 10d, random programs on top of the corpus


@dataclass
class CriterionResult:
    number: str
    title: str
    passed: bool
    details: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        head = f"criterion {self.number:>3}: {status}  {self.title} ({self.seconds:.1f} s)"
        return "\n".join([head] + [f"    {d}" for d in self.details])


# (test, assertion as pretty-printed, expected verdict); checked under each listed model.
FIGURE_VERDICTS: dict[str, tuple[tuple[str, ...], list[tuple[str, str, str]]]] = {
    "1": (("tso-decl", "tso-op"), [
        ("fig1a", "z == 1", "forbidden"),
        ("fig1b", "z == 1", "allowed"),
        ("fig1c", "z == 1", "forbidden"),
    ]),
    "1w": (("wait",), [
        ("fig2a", "z == 1", "forbidden"),
        ("fig2b", "z == 1", "forbidden"),
        ("wait_sb", "a == 0 && b == 0", "allowed"),
    ]),
    "2": (("wait",), [
        ("fig3a", "a == 1 && b == 0", "forbidden"),
        ("fig3b", "a == 1 && b == 0 && c == 1", "allowed"),
    ]),
    "3": (("tso-decl", "tso-op"), [
        ("rcas_atomicity_a", "x == 2", "allowed"),
        ("rcas_atomicity_b", "x == 2", "allowed"),
        ("rcas_atomicity_c", "x == 2", "forbidden"),
        ("cas_inset", "x == 2", "forbidden"),
    ]),
    "4": (("tso-decl", "tso-op"), [
        ("rcas_reordering_a", "a == 1 && b == 1", "allowed"),
        ("rcas_reordering_b", "a == 1 && b == 1", "forbidden"),
        ("rcas_reordering_c", "a == 0 && b == 0", "allowed"),
    ]),
    "5": ((None,), [
        ("fig5a", "a != b", "forbidden"),
        ("fig5b", "a != b", "allowed"),
        ("fig5c", "a != b", "allowed"),
        ("fig5d", "a != b", "forbidden"),
        ("fig5e", "a != b", "forbidden"),
        ("fig5f", "a != b", "forbidden"),
        ("fig8a", "a != b", "allowed"),
        ("fig8b", "a != b", "forbidden"),
        ("fig8c", "a != b", "forbidden"),
        ("nkl1", "a == 1 && b == 0", "forbidden"),
        ("nkl2", "a == 1 && b == 0", "allowed"),
        ("lkln3", "a == 1 && b == 0", "forbidden"),
        ("lkln3", "a == 1 && c == 0", "allowed"),
        ("nlock_release", "z == 1", "allowed"),
    ]),
    "6": ((None,), [
        ("fig12a", "a == 1 && b == 0", "forbidden"),
        ("fig12b", "a == 0 && b == 0", "forbidden"),
        ("fig12c", "x == 2", "forbidden"),
        ("fig12d", "a == 1 && b == 0", "allowed"),
        ("fig12e", "a == 1 && b == 0", "allowed"),
    ]),
}


def load(name: str, cfg: AcceptanceConfig = AcceptanceConfig()) -> LitmusTest:
    return load_litmus(cfg.corpus / f"{name}.lit")


def corpus_tests(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[LitmusTest]:
    return [load_litmus(p) for p in sorted(cfg.corpus.glob("*.lit"))]


def _timed(fn):
    def run(cfg: AcceptanceConfig = AcceptanceConfig()) -> CriterionResult:
        t0 = time.perf_counter()
        res = fn(cfg)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _figure_checks(keys: tuple[str, ...], cfg: AcceptanceConfig) -> tuple[bool, list[str]]:
    ok, details = True, []
    for key in keys:
        model_list, rows = FIGURE_VERDICTS[key]
        for name, expr, expected in rows:
            test = load(name, cfg)
            for model in model_list:
                v = models.run_model(test, model)
                got = next((a.observed for a in v.assertions if a.expr == expr), None)
                good = got == expected
                ok &= good
                details.append(f"{'ok ' if good else 'BAD'} {name} [{v.model}] {expr}: "
                               f"expected {expected}, observed {got or 'no such assertion'}")
    return ok, details


@_timed
def criterion_1(cfg):
    """Poll/Wait basics."""
    ok, d = _figure_checks(("1", "1w"), cfg)
    return CriterionResult("1", "poll and wait basics", ok, d)


@_timed
def criterion_2(cfg):
    ok, d = _figure_checks(("2",), cfg)
    return CriterionResult("2", "shared variable (wait + brl)", ok, d)


@_timed
def criterion_3(cfg):
    ok, d = _figure_checks(("3",), cfg)
    return CriterionResult("3", "remote RMW atomicity", ok, d)


@_timed
def criterion_4(cfg):
    ok, d = _figure_checks(("4",), cfg)
    return CriterionResult("4", "remote RMW ordering", ok, d)


@_timed
def criterion_5(cfg):
    ok, d = _figure_checks(("5",), cfg)
    return CriterionResult("5", "lock specifications", ok, d)


@_timed
def criterion_6(cfg):
    ok, d = _figure_checks(("6",), cfg)
    return CriterionResult("6", "SC library specification", ok, d)


# ---------------------------------------------------------------------------
# Criterion 7


_LOCK_LIB = {"WL": "wlock", "SL": "slock", "NL": "nlock"}


def implemented_libraries(test: LitmusTest) -> list[str]:
    """The lock and SC libraries a test uses, i.e. the ones with an implementation."""
    libs = set()
    for t in test.threads:
        for s in walk(t.body):
            if isinstance(s, LockOp):
                libs.add(_LOCK_LIB[s.method[-2:]])
    if test.sc:
        libs.add("sc")
    return sorted(libs)


@dataclass
class SoundnessRow:
    test: str
    library: str
    included: bool
    preserved: bool
    extra: list  # outcomes of the implementation missing from the specification
    lost: list[str]  # assertions whose verdict changed


def soundness_rows(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[SoundnessRow]:
    rows = []
    for test in corpus_tests(cfg):
        for lib in implemented_libraries(test):
            spec = models.run_model(test, "wait")
            impl = models.run_model(test, f"impl:{lib}",
                                    models.RunConfig(INLINED_LOOP_BOUND, INLINED_MAX_CANDIDATES))
            extra = sorted(impl.outcome_set() - spec.outcome_set())
            lost = [f"{a.expr}: spec {a.observed}, impl {b.observed}"
                    for a, b in zip(spec.assertions, impl.assertions) if a.observed != b.observed]
            rows.append(SoundnessRow(test.name, lib, not extra, not lost, extra, lost))
    return rows


@dataclass
class Criterion7:
    inclusion: CriterionResult
    preservation: CriterionResult


def criterion_7_parts(cfg: AcceptanceConfig = AcceptanceConfig()) -> Criterion7:
    t0 = time.perf_counter()
    rows = soundness_rows(cfg)
    secs = time.perf_counter() - t0
    inc = CriterionResult("7a", "implementation outcomes included in specification outcomes",
                          all(r.included for r in rows),
                          [f"{'ok ' if r.included else 'BAD'} {r.test} impl:{r.library}"
                           + ("" if r.included else f" extra outcomes {r.extra}") for r in rows], secs)
    pres = CriterionResult("7b", "figure verdicts preserved after inlining",
                           all(r.preserved for r in rows),
                           [f"{'ok ' if r.preserved else 'BAD'} {r.test} impl:{r.library}"
                            + ("" if r.preserved else " " + "; ".join(r.lost)) for r in rows], 0.0)
    return Criterion7(inc, pres)


def criterion_7(cfg: AcceptanceConfig = AcceptanceConfig()) -> CriterionResult:
    parts = criterion_7_parts(cfg)
    ok = parts.inclusion.passed and parts.preservation.passed
    details = [parts.inclusion.line(), parts.preservation.line()]
    return CriterionResult("7", "implementation soundness (inclusion and verdicts)", ok, details,
                           parts.inclusion.seconds)


# ---------------------------------------------------------------------------
# Criteria 8 and 9


@_timed
def criterion_8(cfg):
    ok, details = True, []
    for test in corpus_tests(cfg):
        if test.dialect != "wait":
            continue
        wait_out = models.run_model(test, "wait").outcome_set()
        op_out = models.run_model(test, "tso-op").outcome_set()
        good = op_out <= wait_out
        ok &= good
        details.append(f"{'ok ' if good else 'BAD'} {test.name}: {len(op_out)} translated outcomes, "
                       f"{len(wait_out)} wait outcomes" + ("" if good else f", extra {sorted(op_out - wait_out)}"))
    return CriterionResult("8", "wait-to-tso translation outcome inclusion", ok, details)


def op_decl_mismatch(test: LitmusTest) -> tuple[frozenset, frozenset]:
    op = op_sim.op_verdict(test).outcome_set()
    decl = tso_decl.tso_verdict(test).outcome_set()
    return op - decl, decl - op


@_timed
def criterion_9(cfg):
    ok, details = True, []
    for test in corpus_tests(cfg):
        if test.dialect != "tso":
            continue
        only_op, only_decl = op_decl_mismatch(test)
        good = not only_op and not only_decl
        ok &= good
        details.append(f"{'ok ' if good else 'BAD'} {test.name}"
                       + ("" if good else f": op-only {sorted(only_op)}, decl-only {sorted(only_decl)}"))
    gen = GenConfig(dialect="tso", max_events=cfg.random_max_events)
    bad = [seed for seed in range(cfg.random_programs) if any(op_decl_mismatch(random_test(seed, gen)))]
    ok &= not bad
    details.append(f"{'ok ' if not bad else 'BAD'} {cfg.random_programs} random programs "
                   f"(≤{cfg.random_max_events} instructions): {len(bad)} mismatches {bad[:10]}")
    return CriterionResult("9", "operational and declarative tso agree", ok, details)


# ---------------------------------------------------------------------------
# Criterion 10


def table_goldens_match(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[str]:
    """Names of the tables whose golden file differs from the built-in table."""
    built = {"sto": STO_TSV, "ippo": IPPO_TSV, "oppo": OPPO_TSV}
    return [n for n, text in built.items() if (cfg.golden / f"{n}.tsv").read_bytes() != text.encode()]


def oppo_not_in_ippo() -> list[tuple]:
    bad = []
    for a in TSO_LABELS:
        for b in TSO_LABELS:
            for na, nb in ((1, 1), (1, 2)):
                sa = Stamp(a, na if a in TSO_NODE_LABELS else None)
                sb = Stamp(b, nb if b in TSO_NODE_LABELS else None)
                for same in (True, False):
                    if oppo_tso(sa, sb, same) and not ippo_tso(sa, sb, same):
                        bad.append((str(sa), str(sb), same))
    return bad


def witness_failures(test: LitmusTest, model: str) -> list[str]:
    """Allowed assertions whose witness does not re-verify independently."""
    v = models.run_model(test, model, models.RunConfig(traces=True))
    prog = models.lower(test, model)
    bad = []
    for a in v.assertions:
        if a.observed != "allowed":
            continue
        key = tuple(sorted(a.witness.items()))
        w = v.witnesses.get(key)
        if w is None:
            bad.append(f"{test.name} [{model}] {a.expr}: no witness")
        elif isinstance(w, list):
            if key not in op_sim.replay_trace(prog, w):
                bad.append(f"{test.name} [{model}] {a.expr}: trace does not replay")
        else:
            ok = tso_decl.check_tso(w) if w.dialect == "tso" else wait_model.check_composed(w)
            if not ok:
                bad.append(f"{test.name} [{model}] {a.expr}: witness inconsistent")
    return bad


def oracle_mismatches(dialect: str, seeds: int, max_labels: int) -> list[int]:
    gen = GenConfig(dialect=dialect, max_events=max_labels, count="labels")
    bad = []
    for seed in range(seeds):
        t = random_test(seed, gen)
        if dialect == "tso":
            oracle = brute_force_outcomes(t, "tso", tso_decl.check_tso)
            pruned = tso_decl.search(t).outcomes
        else:
            oracle = brute_force_outcomes(t, "wait", wait_model.check_composed)
            pruned = wait_model.search(t).outcomes
        if oracle != pruned:
            bad.append(seed)
    return bad


def invariant_violations(cfg: AcceptanceConfig = AcceptanceConfig()) -> tuple[int, list[str]]:
    programs = []
    for test in corpus_tests(cfg):
        if test.dialect == "tso":
            programs.append(test)
        elif test.dialect == "wait":
            programs.append(lib_impls.translate_wait_to_tso(test))
    programs += [random_test(seed, GenConfig()) for seed in range(cfg.invariant_programs)]
    count, bad = 0, []
    for prog in programs:
        for st in op_sim.reachable_states(prog):
            count += 1
            for problem in op_sim.check_invariants(st):
                bad.append(f"{prog.name}: {problem}")
    return count, bad


def roundtrip_failures(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[str]:
    return [t.name for t in corpus_tests(cfg) if parse_litmus(pretty(t)) != t]


def criterion_10(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[CriterionResult]:
    out = []

    t0 = time.perf_counter()
    diff, bad = table_goldens_match(cfg), oppo_not_in_ippo()
    out.append(CriterionResult("10a", "table goldens byte-match; oppo ⊆ ippo", not diff and not bad,
                               [f"differing goldens: {diff or 'none'}", f"oppo cells outside ippo: {bad or 'none'}"],
                               time.perf_counter() - t0))

    t0 = time.perf_counter()
    fails, checked = [], 0
    for test in corpus_tests(cfg):
        for model in ([models.default_model(test)] + (["tso-op"] if test.dialect in ("tso", "wait") else [])):
            fails += witness_failures(test, model)
            checked += 1
    out.append(CriterionResult("10b", "witnesses of allowed verdicts re-verify", not fails,
                               [f"{checked} test/model runs checked"] + fails, time.perf_counter() - t0))

    t0 = time.perf_counter()
    details, ok = [], True
    for dialect in ("tso", "wait"):
        bad = oracle_mismatches(dialect, cfg.oracle_seeds, cfg.oracle_max_labels)
        ok &= not bad
        details.append(f"{dialect}: {cfg.oracle_seeds} seeds, {len(bad)} mismatches {bad[:10]}")
    out.append(CriterionResult("10c", "pruned search equals brute-force oracle", ok, details,
                               time.perf_counter() - t0))

    t0 = time.perf_counter()
    count, bad = invariant_violations(cfg)
    out.append(CriterionResult("10d", "machine-state invariants on every reachable state", not bad,
                               [f"{count} states checked"] + bad[:10], time.perf_counter() - t0))

    t0 = time.perf_counter()
    bad = roundtrip_failures(cfg)
    out.append(CriterionResult("10e", "parse/pretty round-trip on the corpus", not bad,
                               [f"failures: {bad or 'none'}"], time.perf_counter() - t0))
    return out


def run_all(cfg: AcceptanceConfig = AcceptanceConfig()) -> list[CriterionResult]:
    results = [criterion_1(cfg), criterion_2(cfg), criterion_3(cfg), criterion_4(cfg), criterion_5(cfg),
               criterion_6(cfg), criterion_7(cfg), criterion_8(cfg), criterion_9(cfg)]
    parts = criterion_10(cfg)
    results.append(CriterionResult("10", "property suites", all(p.passed for p in parts),
                                   [p.line() for p in parts], sum(p.seconds for p in parts)))
    return results


__all__ = ["AcceptanceConfig", "CriterionResult", "FIGURE_VERDICTS", "run_all", "criterion_7_parts",
           "criterion_10", "soundness_rows", "implemented_libraries"]
