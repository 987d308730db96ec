"""Command-line front end and model plumbing."""

from __future__ import annotations

import json
import shutil

import pytest
from click.testing import CliRunner

from conftest import CORPUS, corpus_test
from rdmacheck import models
from rdmacheck.cli import EXIT_CAP, EXIT_FAIL, EXIT_PARSE, EXIT_PASS, main
from rdmacheck.litmus import LitmusError, parse_litmus
from rdmacheck.stamps import dump_tables


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def lit_file(tmp_path, name: str, text: str):
    p = tmp_path / f"{name}.lit"
    p.write_text(text)
    return p


# -- models -------------------------------------------------------------------

def test_known_models():
    for m in ("wait", "tso-decl", "tso-op", "spec:wlock", "spec:brl", "impl:sc"):
        assert models.known_model(m)
    for m in ("impl:brl", "spec:foo", "tso"):
        assert not models.known_model(m)


def test_default_model_follows_header():
    assert models.default_model(corpus_test("fig5a")) == "spec:wlock"
    t = corpus_test("fig1a")
    from dataclasses import replace

    assert models.default_model(replace(t, model=None)) == "tso-decl"


def test_dialect_mismatches_are_errors():
    with pytest.raises(LitmusError):
        models.lower(corpus_test("fig1a"), "wait")
    with pytest.raises(LitmusError):
        models.lower(corpus_test("fig5a"), "tso-op")
    with pytest.raises(LitmusError):
        models.lower(corpus_test("fig1a"), "nonsense")


def test_compare_tso_models_equal():
    assert models.compare(corpus_test("fig1b"), "tso-decl", "tso-op").relation == "equal"


# -- check --------------------------------------------------------------------

def test_check_pass_and_text_report():
    r = run("check", CORPUS / "fig1a.lit")
    assert r.exit_code == EXIT_PASS
    assert "PASS fig1a [tso-decl] forbidden z == 1: observed forbidden" in r.output


def test_check_fig1a_under_wait_is_a_usage_error():
    r = run("check", CORPUS / "fig1a.lit", "--model", "wait")
    assert r.exit_code == EXIT_PARSE


def test_check_fig1b_tso_op_with_witness(tmp_path):
    out = tmp_path / "w"
    r = run("check", CORPUS / "fig1b.lit", "--model", "tso-op", "--witness", out)
    assert r.exit_code == EXIT_PASS
    files = sorted(p.name for p in out.iterdir())
    assert files == ["fig1b-1.txt", "fig1b-2.txt"]
    text = (out / "fig1b-2.txt").read_text()
    assert "z == 1" in text and "local-read" in text


def test_check_witness_for_declarative_model(tmp_path):
    r = run("check", CORPUS / "wait_sb.lit", "--witness", tmp_path)
    assert r.exit_code == EXIT_PASS
    assert "rf:" in (tmp_path / "wait_sb-1.txt").read_text()


def test_check_empty_test(tmp_path):
    p = lit_file(tmp_path, "empty", "test empty\nnodes 1\n")
    r = run("check", p)
    assert r.exit_code == EXIT_PASS and "no assertions" in r.output


def test_check_failing_expectation(tmp_path):
    text = (CORPUS / "fig1a.lit").read_text().replace("assert forbidden z == 1", "assert allowed z == 1")
    r = run("check", lit_file(tmp_path, "flip", text))
    assert r.exit_code == EXIT_FAIL and "FAIL fig1a" in r.output


def test_check_parse_error(tmp_path):
    r = run("check", lit_file(tmp_path, "bad", "test bad\nnodes 1\nthread t1@1 { x := }\n"))
    assert r.exit_code == EXIT_PARSE and "line 3" in r.output


@pytest.mark.parametrize("flags", [("--model", "tso-op", "--max-states", "5"),
                                   ("--model", "tso-decl", "--max-candidates", "2")])
def test_check_resource_cap(flags):
    r = run("check", CORPUS / "rcas_reordering_c.lit", *flags)
    assert r.exit_code == EXIT_CAP and "resource cap" in r.output


@pytest.mark.parametrize("name,model", [("fig1b", "tso-op"), ("fig5b", None), ("lkln3", None),
                                        ("wait_sb", "tso-decl")])
def test_json_matches_text(name, model):
    extra = ("--model", model) if model else ()
    js = run("check", CORPUS / f"{name}.lit", "--json", *extra)
    tx = run("check", CORPUS / f"{name}.lit", *extra)
    assert js.exit_code == tx.exit_code == EXIT_PASS
    data = json.loads(js.output)
    assert set(data) == {"test", "model", "assertions", "outcomes", "stats"}
    assert "time_ms" in data["stats"]
    lines = tx.output.strip().splitlines()
    assert len(lines) == len(data["assertions"])
    for line, a in zip(lines, data["assertions"]):
        assert line == (f"{'PASS' if a['expected'] == a['observed'] else 'FAIL'} {data['test']} [{data['model']}] "
                        f"{a['expected']} {a['expr']}: observed {a['observed']}")
        assert ("witness" in a) == (a["observed"] == "allowed")


# -- compare ------------------------------------------------------------------

def test_compare_impl_included_in_spec():
    r = run("compare", CORPUS / "fig5b.lit", "impl:wlock", "spec:wlock", "--loop-bound", "2")
    assert r.exit_code == EXIT_PASS
    assert "A⊆B" in r.output and "only under spec:wlock" in r.output


def test_compare_tso_decl_vs_op():
    r = run("compare", CORPUS / "rcas_reordering_c.lit", "tso-decl", "tso-op", "--json")
    assert json.loads(r.output)["relation"] == "equal"


def test_compare_same_model(tmp_path):
    p = lit_file(tmp_path, "w", "test w\nnodes 1\nloc x@1 = 0\nthread t1@1 { x := 1 }\n")
    r = run("compare", p, "wait", "wait")
    assert "equal" in r.output


# -- corpus -------------------------------------------------------------------

def test_corpus_all_pass():
    r = run("corpus", CORPUS, "--jobs", 2)
    assert r.exit_code == EXIT_PASS
    rows = [l for l in r.output.splitlines()[1:] if l.strip()]
    assert len(rows) == len(list(CORPUS.glob("*.lit")))
    assert all(" PASS " in l for l in rows)


def test_corpus_flipped_expectation(tmp_path):
    for name in ("fig1a", "fig2a", "fig5a"):
        shutil.copy(CORPUS / f"{name}.lit", tmp_path)
    p = tmp_path / "fig2a.lit"
    p.write_text(p.read_text().replace("assert forbidden z == 1", "assert allowed z == 1"))
    r = run("corpus", tmp_path, "--json")
    assert r.exit_code == EXIT_FAIL
    rows = json.loads(r.output)
    assert [(row["test"], row["result"]) for row in rows] == [("fig1a", "PASS"), ("fig2a", "FAIL"),
                                                              ("fig5a", "PASS")]


def test_corpus_empty_dir(tmp_path):
    r = run("corpus", tmp_path)
    assert r.exit_code == EXIT_PASS
    assert len(r.output.strip().splitlines()) == 1  # header only


def test_corpus_parse_error(tmp_path):
    lit_file(tmp_path, "bad", "nonsense\n")
    assert run("corpus", tmp_path).exit_code == EXIT_PARSE


# -- inline, translate, dump-tables ---------------------------------------------

@pytest.mark.parametrize("lib,flags", [("wlock", ()), ("slock", ("--shallow",)), ("nlock", ()), ("sc", ())])
def test_inline_output_parses(lib, flags):
    name = {"wlock": "fig5a", "slock": "fig8c", "nlock": "nkl2", "sc": "fig12a"}[lib]
    r = run("inline", CORPUS / f"{name}.lit", lib, *flags)
    assert r.exit_code == EXIT_PASS
    parse_litmus(r.output)


def test_translate_output_parses():
    r = run("translate", CORPUS / "fig2b.lit")
    assert r.exit_code == EXIT_PASS
    assert parse_litmus(r.output).dialect == "tso"


def test_translate_rejects_tso():
    assert run("translate", CORPUS / "fig1a.lit").exit_code == EXIT_PARSE


def test_dump_tables():
    r = run("dump-tables")
    assert r.exit_code == EXIT_PASS and r.output == dump_tables()
