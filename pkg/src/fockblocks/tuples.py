"""Tuples of handed blocks, their markers, and ambidextrous-interval sets.

A tuple factors a signature string into handed blocks of bounded length such
that no two adjacent blocks could be merged into a single handed block within
the length bound.  Tuples are the index set of the reordered resolvent
expansion; the interval machinery at the bottom drives its resummation proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, List, Tuple as Pair

from .errors import BudgetError
from .signatures import (
    Handedness,
    SigString,
    classify,
    compose,
    enumerate_strings,
    format_string,
    is_handed,
)

MAX_TUPLE_LENGTH = 8


class BlockTuple(tuple):
    """Factorization of a string into handed blocks of length <= max_block.

    Adjacent blocks whose combined length fits the bound must not compose to
    a handed string; this is what makes the factorization minimal.
    """

    max_block: int

    def __new__(cls, blocks, max_block: int):
        blocks = tuple(SigString(b) for b in blocks)
        if max_block < 1:
            raise ValueError("max_block must be >= 1")
        if not blocks:
            raise ValueError("tuple must contain at least one block")
        for b in blocks:
            if len(b) > max_block:
                raise ValueError(
                    f"block {format_string(b)} longer than max_block={max_block}"
                )
            if not is_handed(b):
                raise ValueError(f"block {format_string(b)} is not handed")
        for b1, b2 in zip(blocks, blocks[1:]):
            if len(b1) + len(b2) <= max_block and is_handed(compose(b1, b2)):
                raise ValueError(
                    "adjacent blocks "
                    f"{format_string(b1)} ; {format_string(b2)} compose to a "
                    "handed string within the length bound"
                )
        self = super().__new__(cls, blocks)
        self.max_block = max_block
        return self

    @property
    def total_length(self) -> int:
        return sum(len(b) for b in self)

    def to_json(self) -> dict:
        """Report schema: block texts, handedness labels, and markers."""
        return {
            "max_block": self.max_block,
            "blocks": [format_string(b) for b in self],
            "handedness": [classify(b).value for b in self],
            "markers": markers(self).to_json(),
        }

    def __repr__(self):
        return f"BlockTuple({format_tuple(self)!r}, max_block={self.max_block})"


def tuple_to_string(t: BlockTuple) -> SigString:
    entries = []
    for b in t:
        entries.extend(b)
    return SigString(entries)


def equivalent(t1: BlockTuple, t2: BlockTuple) -> bool:
    if t1.total_length != t2.total_length:
        raise ValueError("equivalence compares tuples of equal total length")
    return tuple_to_string(t1) == tuple_to_string(t2)


def enumerate_tuples(n: int, k: int) -> Iterator[BlockTuple]:
    """Every tuple with total length k and max block length n, exactly once,
    in a deterministic order."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if k > MAX_TUPLE_LENGTH:
        raise BudgetError(f"tuple enumeration capped at k <= {MAX_TUPLE_LENGTH}")
    handed_by_len = {
        j: tuple(s for s in enumerate_strings(j) if is_handed(s))
        for j in range(1, min(n, k) + 1)
    }

    def rec(remaining, blocks):
        if remaining == 0:
            yield BlockTuple(blocks, n)
            return
        for j in range(1, min(n, remaining) + 1):
            for s in handed_by_len[j]:
                if blocks:
                    prev = blocks[-1]
                    if len(prev) + j <= n and is_handed(compose(prev, s)):
                        continue
                yield from rec(remaining - j, blocks + [s])

    yield from rec(k, [])


def canonical_tuple(s: SigString, n: int) -> BlockTuple:
    """Greedy representative of the equivalence class over s.

    Starts from singleton blocks and merges adjacent pairs whose composition
    is handed within the length bound, restarting the scan after each merge.
    The class of the result does not depend on the merge order.
    """
    if n < 1:
        raise ValueError("max block length must be >= 1")
    blocks: List[SigString] = [SigString((e,)) for e in s]
    merged = True
    while merged:
        merged = False
        for i in range(len(blocks) - 1):
            b1, b2 = blocks[i], blocks[i + 1]
            if len(b1) + len(b2) <= n and is_handed(compose(b1, b2)):
                blocks[i : i + 2] = [compose(b1, b2)]
                merged = True
                break
    return BlockTuple(blocks, n)


@dataclass(frozen=True)
class TupleMarkers:
    """Start indices of right-handed blocks, end indices of left-handed
    blocks, and (start, end) spans of ambidextrous blocks."""

    starts: frozenset
    ends: frozenset
    spans: frozenset

    def to_json(self):
        return {
            "B": sorted(self.starts),
            "E": sorted(self.ends),
            "A": sorted(self.spans),
        }


def block_bounds(t: BlockTuple) -> List[Pair[int, int]]:
    """1-based (start, end) index pair of each block inside the full string."""
    bounds = []
    pos = 1
    for b in t:
        bounds.append((pos, pos + len(b) - 1))
        pos += len(b)
    return bounds


def markers(t: BlockTuple) -> TupleMarkers:
    starts, ends, spans = set(), set(), set()
    for b, (lo, hi) in zip(t, block_bounds(t)):
        cls = classify(b)
        if cls is Handedness.RIGHT_HANDED:
            starts.add(lo)
        elif cls is Handedness.LEFT_HANDED:
            ends.add(hi)
        elif cls is Handedness.AMBIDEXTROUS:
            spans.add((lo, hi))
        else:  # unreachable: constructor enforces handed blocks
            raise AssertionError
    return TupleMarkers(frozenset(starts), frozenset(ends), frozenset(spans))


# --- ambidextrous sub-strings and interval collections ------------------------


def ambidextrous_substrings(s: SigString) -> frozenset:
    """All 1-based index pairs (j, j') with j < j' whose sub-string is
    ambidextrous.  Any two members are nested or disjoint."""
    out = set()
    k = len(s)
    for j in range(1, k):
        for jp in range(j + 1, k + 1):
            if classify(s.substring(j, jp)) is Handedness.AMBIDEXTROUS:
                out.add((j, jp))
    return frozenset(out)


@dataclass(frozen=True)
class PSet:
    """A collection of pairwise disjoint ambidextrous intervals of s with
    lengths in (n, N]."""

    base: SigString
    n: int
    N: int
    intervals: tuple = field(default=())  # sorted by left endpoint

    def __post_init__(self):
        if self.n > self.N:
            raise ValueError("need n <= N")
        ambi = ambidextrous_substrings(self.base)
        ivs = tuple(sorted(self.intervals))
        object.__setattr__(self, "intervals", ivs)
        for (j, jp) in ivs:
            if (j, jp) not in ambi:
                raise ValueError(f"({j},{jp}) is not an ambidextrous sub-string")
            if not (self.n < jp - j + 1 <= self.N):
                raise ValueError(
                    f"interval ({j},{jp}) has length outside ({self.n},{self.N}]"
                )
        for (j, jp), (i, ip) in zip(ivs, ivs[1:]):
            if i <= jp:
                raise ValueError("intervals must be pairwise disjoint")

    def complement(self) -> tuple:
        """The gap intervals of [1, k] between the members, in order.

        Always has len(intervals)+1 entries; empty gaps appear as (l, l')
        with l > l' and carry length 0.
        """
        k = len(self.base)
        if not self.intervals:
            return ((1, k),)
        gaps = [(1, self.intervals[0][0] - 1)]
        for (j, jp), (i, ip) in zip(self.intervals, self.intervals[1:]):
            gaps.append((jp + 1, i - 1))
        gaps.append((self.intervals[-1][1] + 1, k))
        return tuple(gaps)

    def is_subordinate_to(self, other: "PSet") -> bool:
        """True when this collection refines ``other`` one level down: it
        contains other's intervals and every extra interval has length
        other.n (= self.n + 1)."""
        if other.base != self.base or other.N != self.N or other.n != self.n + 1:
            raise ValueError("subordination relates levels n and n+1 of one string")
        mine = set(self.intervals)
        theirs = set(other.intervals)
        if not theirs <= mine:
            return False
        return all(jp - j + 1 == other.n for (j, jp) in mine - theirs)


def enumerate_psets(s: SigString, n: int, N: int) -> List[PSet]:
    """All collections of pairwise disjoint ambidextrous intervals with
    lengths in (n, N], the empty collection first."""
    if n > N:
        raise ValueError("need n <= N")
    candidates = sorted(
        (j, jp) for (j, jp) in ambidextrous_substrings(s) if n < jp - j + 1 <= N
    )
    out: List[PSet] = []

    def rec(idx, chosen):
        if idx == len(candidates):
            out.append(PSet(s, n, N, tuple(chosen)))
            return
        rec(idx + 1, chosen)  # skip candidate
        j, jp = candidates[idx]
        if all(jp < a or b < j for (a, b) in chosen):
            rec(idx + 1, chosen + [(j, jp)])

    rec(0, [])
    out.sort(key=lambda u: (len(u.intervals), u.intervals))
    return out


def subordinates(u0: PSet) -> List[PSet]:
    """All U one level below u0 with U subordinate to u0."""
    n = u0.n - 1
    if n < 1:
        raise ValueError("no level below n = 1")
    extras = sorted(
        (j, jp)
        for (j, jp) in ambidextrous_substrings(u0.base)
        if jp - j + 1 == u0.n
        and all(jp < a or b < j for (a, b) in u0.intervals)
    )
    out = []

    def rec(idx, chosen):
        if idx == len(extras):
            out.append(PSet(u0.base, n, u0.N, u0.intervals + tuple(chosen)))
            return
        rec(idx + 1, chosen)
        j, jp = extras[idx]
        if all(jp < a or b < j for (a, b) in chosen):
            rec(idx + 1, chosen + [(j, jp)])

    rec(0, [])
    out.sort(key=lambda u: (len(u.intervals), u.intervals))
    return out


# --- text form ----------------------------------------------------------------


def format_tuple(t: BlockTuple) -> str:
    """Semicolon-separated blocks of the comma-separated token form."""
    return ";".join(format_string(b) for b in t)


def parse_tuple(text: str, max_block: int) -> BlockTuple:
    from .signatures import parse_string

    return BlockTuple([parse_string(part) for part in text.split(";")], max_block)
