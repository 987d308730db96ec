"""Print one PASS/FAIL line per acceptance criterion, with details.

Usage: python scripts/run_acceptance.py [--quick] [--only N ...]

``--quick`` shrinks the random-program counts (criteria 9 and 10) for a fast
smoke run; the full run matches the pytest acceptance suite.
"""

from __future__ import annotations

import argparse
import sys

from rdmacheck import acceptance as A


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small random samples for criteria 9 and 10")
    ap.add_argument("--only", nargs="*", type=int, help="criterion numbers to run")
    ap.add_argument("--brief", action="store_true", help="omit per-check details")
    args = ap.parse_args(argv)
    cfg = A.AcceptanceConfig()
    if args.quick:
        cfg = A.AcceptanceConfig(random_programs=20, oracle_seeds=50, invariant_programs=5)
    runners = {1: A.criterion_1, 2: A.criterion_2, 3: A.criterion_3, 4: A.criterion_4, 5: A.criterion_5,
               6: A.criterion_6, 7: A.criterion_7, 8: A.criterion_8, 9: A.criterion_9}
    failed = 0
    for n in args.only or range(1, 11):
        if n == 10:
            parts = A.criterion_10(cfg)
            res = A.CriterionResult("10", "property suites", all(p.passed for p in parts),
                                    [p.line() for p in parts], sum(p.seconds for p in parts))
        else:
            res = runners[n](cfg)
        failed += not res.passed
        print(res.line().splitlines()[0] if args.brief else res.line(), flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
