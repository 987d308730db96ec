"""Command-line front end.

Exit codes: 0 every assertion passed, 1 some assertion failed, 2 parse or
usage error, 3 a resource cap was exceeded.
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import lib_impls, models
from .engine import ResourceLimit
from .litmus import DEFAULT_LOOP_BOUND, LitmusError, load_litmus, pretty
from .report import describe_witness, format_verdict
from .stamps import dump_tables

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_CAP = 0, 1, 2, 3


def _cfg(loop_bound: int, max_states: int, max_candidates: int, traces: bool = False) -> models.RunConfig:
    return models.RunConfig(loop_bound, max_candidates, max_states, traces)


def _load(path: str):
    try:
        return load_litmus(path)
    except LitmusError as e:
        click.echo(f"{path}: {e}", err=True)
        sys.exit(EXIT_PARSE)


def _model_option(f):
    return click.option("--model", "model", default=None,
                        help="wait, spec:<lib>, impl:<lib>, tso-decl or tso-op (default: header directive).")(f)


def _common(f):
    f = click.option("--loop-bound", default=DEFAULT_LOOP_BOUND, show_default=True, help="Loop unrolling bound.")(f)
    f = click.option("--max-states", default=models.op_sim.DEFAULT_MAX_STATES, show_default=True,
                     help="State cap of the operational machine.")(f)
    f = click.option("--max-candidates", default=models.DEFAULT_MAX_CANDIDATES, show_default=True,
                     help="Search-node cap of the declarative models.")(f)
    return f


@click.group()
def main():
    """Check litmus tests against RDMA memory models and library specifications."""


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@_model_option
@_common
@click.option("--json", "as_json", is_flag=True, help="Emit the verdict as JSON.")
@click.option("--witness", "witness_dir", type=click.Path(file_okay=False), default=None,
              help="Write one witness file per allowed assertion into this directory.")
def check(path, model, loop_bound, max_states, max_candidates, as_json, witness_dir):
    """Check one test's assertions."""
    test = _load(path)
    cfg = _cfg(loop_bound, max_states, max_candidates, traces=witness_dir is not None)
    try:
        v = models.run_model(test, model, cfg)
    except ResourceLimit as e:
        click.echo(f"{test.name}: resource cap exceeded: {e}", err=True)
        sys.exit(EXIT_CAP)
    except LitmusError as e:
        click.echo(f"{test.name}: {e}", err=True)
        sys.exit(EXIT_PARSE)
    if witness_dir is not None:
        _write_witnesses(Path(witness_dir), v)
    click.echo(json.dumps(v.to_json(), indent=2) if as_json else format_verdict(v))
    sys.exit(EXIT_PASS if v.passed else EXIT_FAIL)


def _write_witnesses(out: Path, v) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for i, a in enumerate(v.assertions):
        if a.witness is None:
            continue
        key = tuple(sorted(a.witness.items()))
        w = v.witnesses.get(key)
        body = describe_witness(w) if w is not None else "(no witness recorded)"
        head = f"# {v.test} [{v.model}] {a.expected} {a.expr}\n# outcome: {a.witness}\n"
        (out / f"{v.test}-{i + 1}.txt").write_text(head + body + "\n")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_a")
@click.argument("model_b")
@_common
@click.option("--json", "as_json", is_flag=True)
def compare(path, model_a, model_b, loop_bound, max_states, max_candidates, as_json):
    """Compare the outcome sets of one test under two models."""
    test = _load(path)
    try:
        c = models.compare(test, model_a, model_b, _cfg(loop_bound, max_states, max_candidates))
    except ResourceLimit as e:
        click.echo(f"{test.name}: resource cap exceeded: {e}", err=True)
        sys.exit(EXIT_CAP)
    except LitmusError as e:
        click.echo(f"{test.name}: {e}", err=True)
        sys.exit(EXIT_PARSE)
    if as_json:
        click.echo(json.dumps({"test": test.name, "A": model_a, "B": model_b, "relation": c.relation,
                               "only_A": c.only_a, "only_B": c.only_b}, indent=2))
    else:
        click.echo(f"{test.name}: {model_a} vs {model_b}: {c.relation}")
        for o in c.only_a:
            click.echo(f"  only under {model_a}: {o}")
        for o in c.only_b:
            click.echo(f"  only under {model_b}: {o}")
    sys.exit(EXIT_PASS)


def _corpus_one(args):
    path, model, cfg = args
    t0 = time.perf_counter()
    try:
        test = load_litmus(path)
    except LitmusError as e:
        return {"file": path, "test": Path(path).stem, "model": model or "-", "assertions": 0,
                "result": "PARSE-ERROR", "detail": str(e), "time_ms": 0.0}
    try:
        v = models.run_model(test, model, cfg)
        result = "PASS" if v.passed else "FAIL"
        detail = format_verdict(v)
        n, used = len(v.assertions), v.model
    except ResourceLimit as e:
        result, detail, n, used = "CAP", str(e), len(test.assertions), model or models.default_model(test)
    except LitmusError as e:
        result, detail, n, used = "ERROR", str(e), len(test.assertions), model or models.default_model(test)
    return {"file": path, "test": test.name, "model": used, "assertions": n, "result": result,
            "detail": detail, "time_ms": round((time.perf_counter() - t0) * 1000, 1)}


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@_model_option
@_common
@click.option("--jobs", default=1, show_default=True, help="Worker processes (one file per task).")
@click.option("--json", "as_json", is_flag=True)
def corpus(directory, model, loop_bound, max_states, max_candidates, jobs, as_json):
    """Run every .lit file of a directory with its own model directive."""
    files = sorted(str(p) for p in Path(directory).glob("*.lit"))
    cfg = _cfg(loop_bound, max_states, max_candidates)
    work = [(f, model, cfg) for f in files]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_corpus_one, work))
    else:
        rows = [_corpus_one(w) for w in work]
    if as_json:
        click.echo(json.dumps(rows, indent=2))
    else:
        click.echo(f"{'test':24} {'model':14} {'asserts':>7} {'result':12} {'time_ms':>9}")
        for r in rows:
            click.echo(f"{r['test']:24} {r['model']:14} {r['assertions']:>7} {r['result']:12} {r['time_ms']:>9}")
        for r in rows:
            if r["result"] != "PASS":
                click.echo(f"\n{r['file']}:\n{r['detail']}")
    codes = {r["result"] for r in rows}
    if "PARSE-ERROR" in codes or "ERROR" in codes:
        sys.exit(EXIT_PARSE)
    if "CAP" in codes:
        sys.exit(EXIT_CAP)
    sys.exit(EXIT_FAIL if "FAIL" in codes else EXIT_PASS)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.argument("library", type=click.Choice(models.IMPL_LIBS))
@click.option("--shallow", is_flag=True, help="Stop at the next library down (slock to wlock, sc to nlock).")
def inline(path, library, shallow):
    """Print a test with one library replaced by its implementation."""
    test = _load(path)
    try:
        if library == "slock":
            out = lib_impls.inline_slock(test, deep=not shallow)
        elif library == "sc":
            out = lib_impls.inline_sc(test, deep=not shallow)
        else:
            out = lib_impls.inline_library(test, library)
    except LitmusError as e:
        click.echo(f"{test.name}: {e}", err=True)
        sys.exit(EXIT_PARSE)
    click.echo(pretty(out), nl=False)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def translate(path):
    """Print a WAIT-dialect test translated to the tso dialect."""
    test = _load(path)
    try:
        out = lib_impls.translate_wait_to_tso(test)
    except LitmusError as e:
        click.echo(f"{test.name}: {e}", err=True)
        sys.exit(EXIT_PARSE)
    click.echo(pretty(out), nl=False)


@main.command("dump-tables")
def dump_tables_cmd():
    """Print the sto, ippo and oppo matrices as TSV."""
    click.echo(dump_tables(), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
