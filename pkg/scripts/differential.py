"""Differential runs over seeded random programs.

    python scripts/differential.py op-decl --seeds 0 500 --max-events 8
    python scripts/differential.py oracle --dialect wait --seeds 0 1000 --max-events 8
    python scripts/differential.py translate --seeds 0 200 --max-events 6

``op-decl`` compares the operational machine with the declarative tso model,
``oracle`` compares the pruned search with the brute-force oracle (events
counted as labelled subevents), and ``translate`` checks that translated wait
programs have no outcome the wait model forbids.  Mismatching programs are
printed in litmus syntax.
"""

from __future__ import annotations

import argparse
import sys
import time

from rdmacheck import lib_impls, op_sim, tso_decl, wait_model
from rdmacheck.exec_enum import brute_force_outcomes
from rdmacheck.litmus import pretty
from rdmacheck.randgen import GenConfig, random_test


def op_decl(t):
    a, b = op_sim.op_verdict(t).outcome_set(), tso_decl.tso_verdict(t).outcome_set()
    return a == b, f"op-only {sorted(a - b)}; decl-only {sorted(b - a)}"


def oracle(t):
    if t.dialect == "tso":
        a, b = brute_force_outcomes(t, "tso", tso_decl.check_tso), tso_decl.search(t).outcomes
    else:
        a, b = brute_force_outcomes(t, "wait", wait_model.check_composed), wait_model.search(t).outcomes
    return a == b, f"oracle-only {sorted(a - b)}; search-only {sorted(b - a)}"


def translate(t):
    a = op_sim.op_verdict(lib_impls.translate_wait_to_tso(t)).outcome_set()
    b = wait_model.verdict(t).outcome_set()
    return a <= b, f"translated-only {sorted(a - b)}"


CHECKS = {"op-decl": (op_decl, "tso", "instructions"), "oracle": (oracle, None, "labels"),
          "translate": (translate, "wait", "instructions")}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="differential runs over random programs")
    ap.add_argument("check", choices=sorted(CHECKS))
    ap.add_argument("--seeds", nargs=2, type=int, default=(0, 200), metavar=("FROM", "TO"))
    ap.add_argument("--max-events", type=int, default=8)
    ap.add_argument("--dialect", choices=("tso", "wait"), default="tso", help="dialect for the oracle check")
    args = ap.parse_args(argv)
    fn, dialect, count = CHECKS[args.check]
    cfg = GenConfig(dialect=dialect or args.dialect, max_events=args.max_events, count=count)
    t0, bad = time.perf_counter(), 0
    for seed in range(*args.seeds):
        t = random_test(seed, cfg)
        ok, why = fn(t)
        if not ok:
            bad += 1
            print(f"MISMATCH seed {seed}: {why}\n{pretty(t)}", flush=True)
    n = args.seeds[1] - args.seeds[0]
    print(f"{args.check} ({cfg.dialect}, ≤{args.max_events} {count}): {n} programs, {bad} mismatches, "
          f"{time.perf_counter() - t0:.1f} s")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
