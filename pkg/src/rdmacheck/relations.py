"""Incrementally closed relations over a fixed set of nodes, stored as bitsets."""

from __future__ import annotations

from typing import Iterable, Iterator


class Cycle(Exception):
    """Raised when an added edge makes the closed relation reflexive."""


class Closure:
    """The transitive closure of a growing relation on ``0..n-1``.

    ``reach[x]`` is an int whose bit ``y`` is set iff ``(x, y)`` is in the closure.
    Edges are only ever added; callers copy the object to backtrack.
    """

    __slots__ = ("reach",)

    def __init__(self, n: int, reach: list[int] | None = None):
        self.reach = reach if reach is not None else [0] * n

    def copy(self) -> "Closure":
        return Closure(0, self.reach[:])

    def __len__(self) -> int:
        return len(self.reach)

    def has(self, a: int, b: int) -> bool:
        return bool(self.reach[a] >> b & 1)

    def add(self, a: int, b: int) -> list[tuple[int, int]]:
        return self.add_row(a, 1 << b)

    def add_row(self, x: int, bits: int) -> list[tuple[int, int]]:
        """Add ``(x, y)`` for every bit ``y`` of ``bits``.

        Returns the rows that grew as ``(z, new_bits)`` pairs and raises
        :class:`Cycle` if the closure stops being irreflexive.
        """
        reach = self.reach
        if not bits & ~reach[x]:
            return []
        closed = bits
        b = bits
        while b:
            low = b & -b
            closed |= reach[low.bit_length() - 1]
            b ^= low
        if closed >> x & 1:
            raise Cycle()
        xbit = 1 << x
        changed = []
        for z, r in enumerate(reach):
            if z == x or r & xbit:
                new = closed & ~r
                if new:
                    reach[z] = r | new
                    changed.append((z, new))
        return changed

    def pairs(self) -> Iterator[tuple[int, int]]:
        for x, r in enumerate(self.reach):
            for y in bits_of(r):
                yield x, y

    def acyclic(self) -> bool:
        return all(not (r >> x & 1) for x, r in enumerate(self.reach))


def bits_of(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(items: Iterable[int]) -> int:
    m = 0
    for i in items:
        m |= 1 << i
    return m


# ---------------------------------------------------------------------------
# Plain set-of-pairs relational algebra, used by the from-scratch checkers.


def compose(r: set, s: set) -> set:
    by_src: dict = {}
    for a, b in s:
        by_src.setdefault(a, []).append(b)
    return {(a, c) for a, b in r for c in by_src.get(b, ())}


def inverse(r: set) -> set:
    return {(b, a) for a, b in r}


def transitive_closure(r: set) -> set:
    """Naive fixpoint closure; quadratic rounds are fine at litmus scale."""
    closure = set(r)
    while True:
        extra = compose(closure, closure) - closure
        if not extra:
            return closure
        closure |= extra


def irreflexive(r: set) -> bool:
    return all(a != b for a, b in r)


def total_orders(items: list) -> Iterator[tuple]:
    """Every strict total order of ``items``, as tuples listing them in order."""
    import itertools

    yield from itertools.permutations(items)


def order_pairs(seq) -> set:
    return {(seq[i], seq[j]) for i in range(len(seq)) for j in range(i + 1, len(seq))}
