"""Regenerate tests/golden/{sto,ippo,oppo}.tsv from the LaTeX source of the ordering tables.

Usage: python scripts/transcribe_tables.py SOURCE.md [OUT_DIR]

The extraction is deliberately independent of ``rdmacheck.stamps``: it reads
the ``\\rowheader`` rows of the three tabulars and maps each cell glyph to
``Y``, ``N``, ``SN`` (same node) or ``sqp`` (same queue pair).
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

WAIT_COLS = ["aCR", "aCW", "aCAS", "aMF", "aWT", "nLR", "nRW", "naRR", "nRR", "nLW", "nF", "gF"]
TSO_COLS = ["lR", "lW", "CAS", "MF", "P", "nlR", "nrW", "narR", "narW", "nrR", "nlW", "nF"]
MACROS = {r"\tagnlr": "nLR", r"\tagnrw": "nRW", r"\tagnarr": "naRR", r"\tagnrr": "nRR", r"\tagnlw": "nLW",
          r"\tagnf": "nF", r"\taggf": "gF", r"\lF": "MF"}


def _name(header: str) -> str:
    m = re.search(r"\\mathtt\{(\w+)\}", header)
    if m:
        return m.group(1)
    for macro, name in MACROS.items():
        if macro in header:
            return name
    raise ValueError(f"unrecognised row header {header!r}")


def _cell(text: str) -> str:
    if "checkyes" in text:
        return "Y"
    if "checkno" in text:
        return "N"
    if "sc sn" in text:
        return "SN"
    if "sqp" in text:
        return "sqp"
    raise ValueError(f"unrecognised cell {text!r}")


def _rows(block: str) -> list[tuple[str, list[str]]]:
    rows = []
    for line in block.splitlines():
        if "\\rowheader{" not in line:
            continue
        start = line.index("\\rowheader{") + len("\\rowheader{")
        depth, i = 1, start
        while depth:
            depth += {"{": 1, "}": -1}.get(line[i], 0)
            i += 1
        header = line[start:i - 1]
        body = line[i:].split("\\\\")[0]
        cells = [c for c in body.split("&")[1:]]
        rows.append((_name(header), [_cell(c) for c in cells]))
    return rows


def _tsv(title: str, cols: list[str], rows) -> str:
    out = [title + "\t" + "\t".join(cols)]
    out += [name + "\t" + "\t".join(cells) for name, cells in rows]
    return "\n".join(out) + "\n"


def transcribe(source: str) -> dict[str, str]:
    sto_end = source.index("\\label{fig:to}")
    sto_start = source.rindex("\\begin{tabular}", 0, sto_end)
    tso_end = source.index("\\label{fig:ippo-oppo}")
    oppo_start = source.rindex("\\begin{tabular}", 0, tso_end)
    ippo_start = source.rindex("\\begin{tabular}", 0, oppo_start)
    return {
        "sto": _tsv("sto", WAIT_COLS, _rows(source[sto_start:sto_end])),
        "ippo": _tsv("ippo", TSO_COLS, _rows(source[ippo_start:oppo_start])),
        "oppo": _tsv("oppo", TSO_COLS, _rows(source[oppo_start:tso_end])),
    }


def main(argv: list[str]) -> None:
    source = Path(argv[1]).read_text()
    out = Path(argv[2]) if len(argv) > 2 else Path(__file__).resolve().parent.parent / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for name, text in transcribe(source).items():
        (out / f"{name}.tsv").write_text(text)
        print(f"wrote {out / name}.tsv")


if __name__ == "__main__":
    main(sys.argv)
