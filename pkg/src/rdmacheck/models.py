"""Model names and the pipeline each one runs.

=================  ==========================================================
``wait``           composed WAIT + library consistency (declarative search)
``spec:<lib>``     the same pipeline; names the library under test
``impl:<lib>``     inline ``<lib>``'s implementation, then ``wait``
``tso-decl``       declarative TSO model (WAIT tests are translated first)
``tso-op``         operational machine (WAIT tests are translated first)
=================  ==========================================================
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lib_impls, op_sim, tso_decl, wait_model
from .engine import DEFAULT_MAX_CANDIDATES
from .litmus import DEFAULT_LOOP_BOUND, LitmusError, LitmusTest
from .report import Verdict

SPEC_LIBS = ("wait", "brl", "wlock", "slock", "nlock", "sc")
IMPL_LIBS = ("wlock", "slock", "nlock", "sc")
BASE_MODELS = ("wait", "tso-decl", "tso-op")


@dataclass(frozen=True)
class RunConfig:
    loop_bound: int = DEFAULT_LOOP_BOUND
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    max_states: int = op_sim.DEFAULT_MAX_STATES
    traces: bool = False  # tso-op: keep one trace per outcome


def known_model(model: str) -> bool:
    if model in BASE_MODELS:
        return True
    kind, _, lib = model.partition(":")
    return (kind == "spec" and lib in SPEC_LIBS) or (kind == "impl" and lib in IMPL_LIBS)


def default_model(test: LitmusTest) -> str:
    """The header directive, else ``tso-decl`` for tso tests and ``wait`` otherwise."""
    if test.model:
        return test.model
    return "tso-decl" if test.dialect == "tso" else "wait"


def lower(test: LitmusTest, model: str) -> LitmusTest:
    """The program a model actually checks (after inlining or translation)."""
    if not known_model(model):
        raise LitmusError(f"unknown model {model!r}")
    if model.startswith("impl:"):
        lib = model.split(":", 1)[1]
        if test.dialect == "tso":
            raise LitmusError(f"model {model} needs a wait- or library-dialect test")
        if lib == "sc":
            return lib_impls.inline_sc(test, deep=False)
        return lib_impls.inline_library(test, lib)
    if model in ("tso-decl", "tso-op"):
        if test.dialect == "library":
            raise LitmusError(f"model {model} cannot run library-dialect tests; inline the libraries first")
        return lib_impls.translate_wait_to_tso(test) if test.dialect == "wait" else test
    if test.dialect == "tso":
        raise LitmusError(f"model {model} cannot run tso-dialect tests")
    return test


def run_model(test: LitmusTest, model: str | None = None, cfg: RunConfig = RunConfig()) -> Verdict:
    """Verdict of ``test`` under ``model`` (default: :func:`default_model`)."""
    model = model or default_model(test)
    prog = lower(test, model)
    if model == "tso-op":
        v = op_sim.op_verdict(prog, model, cfg.loop_bound, cfg.max_states, cfg.traces)
    elif model == "tso-decl":
        v = tso_decl.tso_verdict(prog, model, cfg.loop_bound, cfg.max_candidates)
    else:
        v = wait_model.verdict(prog, model, cfg.loop_bound, cfg.max_candidates)
    v.test = test.name
    return v


@dataclass
class Comparison:
    model_a: str
    model_b: str
    relation: str  # "equal" | "A⊆B" | "B⊆A" | "incomparable"
    only_a: list[dict]
    only_b: list[dict]


def compare(test: LitmusTest, model_a: str, model_b: str, cfg: RunConfig = RunConfig()) -> Comparison:
    a = run_model(test, model_a, cfg).outcome_set()
    b = run_model(test, model_b, cfg).outcome_set()
    if a == b:
        rel = "equal"
    elif a <= b:
        rel = "A⊆B"
    elif b <= a:
        rel = "B⊆A"
    else:
        rel = "incomparable"
    return Comparison(model_a, model_b, rel, [dict(o) for o in sorted(a - b)], [dict(o) for o in sorted(b - a)])
