"""Seeded random litmus programs for differential testing.

Programs use two nodes, one location per node (``x@1``, ``y@2``), values
{0, 1} and at most ``max_events`` events in total.  With ``count="instructions"``
every instruction is one event; with ``count="labels"`` an instruction counts
as the number of labelled subevents it contributes to an execution graph
(a put or get two, a remote RMW up to three).  Every generated
program is well formed for its dialect: polls never outnumber the remote
operations issued before them, and waits name a wid used earlier.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .litmus import (
    Cas, Const, Get, LitmusTest, Location, Mfence, Poll, Put, Rcas, Read, Rfaa, Rfence, Thread, Wait, Write,
)


@dataclass(frozen=True)
class GenConfig:
    dialect: str = "tso"  # "tso" or "wait"
    max_events: int = 8
    threads: int = 2
    values: tuple[int, ...] = (0, 1)
    count: str = "instructions"  # or "labels"


# Upper bound on the labelled subevents of each instruction kind.
LABELS = {"read": 1, "write": 1, "cas": 2, "mfence": 1, "put": 2, "get": 2, "rcas": 3, "rfaa": 3,
          "rfence": 1, "poll": 1, "wait": 1}


_LOCAL = {1: "x", 2: "y"}


def random_test(seed: int, cfg: GenConfig = GenConfig()) -> LitmusTest:
    """A deterministic random program for ``seed``."""
    rng = random.Random(seed)
    budget = rng.randint(cfg.threads, cfg.max_events)
    sizes = [1] * cfg.threads
    for _ in range(budget - cfg.threads):
        sizes[rng.randrange(cfg.threads)] += 1
    threads = []
    for i, size in enumerate(sizes):
        node = 1 + i % 2
        threads.append(Thread(f"t{i + 1}", node, tuple(_body(rng, cfg, node, size))))
    return LitmusTest(
        name=f"rand{seed}",
        nodes=2,
        threads=tuple(threads),
        locs=(Location("x", 1, 0), Location("y", 2, 0)),
        dialect=cfg.dialect,
    )


def _body(rng: random.Random, cfg: GenConfig, node: int, size: int) -> list:
    here, there = _LOCAL[node], _LOCAL[3 - node]
    other = 3 - node
    val = lambda: Const(rng.choice(cfg.values))
    out, pending, wids, regs = [], 0, [], 0

    def reg():
        nonlocal regs
        regs += 1
        return f"r{regs}"

    def wid():
        if wids and rng.random() < 0.5:
            return rng.choice(wids)
        w = f"d{len(wids) + 1}"
        wids.append(w)
        return w

    used = 0
    while used < size:
        kinds = ["read", "write", "put", "get", "rcas", "rfaa", "rfence"]
        if cfg.dialect == "tso":
            kinds += ["cas", "mfence"] + (["poll"] * 2 if pending else [])
        elif wids:
            kinds += ["wait"] * 2
        if cfg.count == "labels":
            kinds = [k for k in kinds if LABELS[k] <= size - used]
        k = rng.choice(kinds)
        used += LABELS[k] if cfg.count == "labels" else 1
        w = wid() if cfg.dialect == "wait" and k in ("put", "get", "rcas", "rfaa") else None
        if k == "read":
            out.append(Read(reg(), here))
        elif k == "write":
            out.append(Write(here, val()))
        elif k == "cas":
            out.append(Cas(reg(), here, val(), val()))
        elif k == "mfence":
            out.append(Mfence())
        elif k == "put":
            out.append(Put(there, here if rng.random() < 0.5 else val(), w))
        elif k == "get":
            out.append(Get(here, there, w))
        elif k == "rcas":
            out.append(Rcas(here, there, val(), val(), w))
        elif k == "rfaa":
            out.append(Rfaa(here, there, Const(1), w))
        elif k == "rfence":
            out.append(Rfence(other))
        elif k == "poll":
            out.append(Poll(other))
        elif k == "wait":
            out.append(Wait(rng.choice(wids)))
        if k in ("put", "get", "rcas", "rfaa"):
            pending += 1
        elif k == "poll":
            pending -= 1
    return out
